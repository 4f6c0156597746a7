"""Grid path planning with a lookup-table action set, soft region
constraints, multi-target batch planning, training-data generation, and a
benchmark harness."""

from .actions import (
    DEFAULT_SPEED_PROFILE,
    Action,
    ActionSet,
    SpeedProfile,
    angle_limit,
    angular_distance,
    build_action_set,
    children_within,
)
from .bench import BenchRow, BenchSuite, dump_search_space, run_suite
from .datagen import (
    Scenario,
    ScenarioSpec,
    build_scenario,
    build_scenario_full,
    generate_samples,
    parse_scenario_file,
    write_scenario_file,
)
from .grid import (
    OccupancyGrid,
    ReferencePath,
    RegionMask,
    dilate,
    inflate,
    line_cells,
    rasterize_path,
    read_grid,
    read_raster,
    trace_line,
    write_raster,
)
from .multi import MultiPlanReport, TargetSamplerConfig, plan_all, sample_targets
from .region import (
    FileSource,
    NullSource,
    OracleSource,
    RegionSource,
    export_oracle_masks,
    render_fcn_input,
)
from .search import (
    EXHAUSTED,
    REACHED,
    TIMEOUT,
    PlanError,
    PlanResult,
    SearchConfig,
    SearchNode,
    SearchStats,
    StartOccupiedError,
    TargetOccupiedError,
    backtrack,
    plan,
)

__all__ = [name for name in dir() if not name.startswith("_")]
