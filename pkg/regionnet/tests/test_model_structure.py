import pytest
import torch
from torch import nn

from regionnet.model import RegionNet, UpBottleneck


@pytest.fixture(scope="module")
def net():
    torch.manual_seed(0)
    return RegionNet()


def test_output_matches_input_resolution(net):
    net.eval()
    with torch.no_grad():
        for hw in ((32, 48), (33, 47), (20, 25)):
            y = net(torch.randn(1, 3, *hw))
            assert y.shape == (1, 2, *hw)


def test_downsampling_uses_average_pooling_only(net):
    kinds = [type(m) for m in net.modules()]
    assert nn.MaxPool2d not in kinds and nn.MaxUnpool2d not in kinds
    assert any(isinstance(m, nn.AvgPool2d) for m in net.modules())


def test_decoder_main_branch_is_bilinear(net):
    ups = [m for m in net.modules() if isinstance(m, UpBottleneck)]
    assert len(ups) == 2
    assert all(u.up_mode == "bilinear" for u in ups)


def test_binary_head(net):
    assert net.fullconv.out_channels == 2


def test_gradients_reach_every_parameter():
    torch.manual_seed(1)
    model = RegionNet()
    model.train()
    x = torch.rand(2, 3, 24, 24)
    t = torch.randint(0, 2, (2, 24, 24))
    loss = nn.functional.cross_entropy(model(x), t)
    loss.backward()
    missing = [n for n, p in model.named_parameters() if p.grad is None]
    assert missing == []


def test_eval_forward_is_deterministic(net):
    net.eval()
    x = torch.rand(1, 3, 24, 24)
    with torch.no_grad():
        a = net(x)
        b = net(x)
    assert torch.equal(a, b)


def test_parameter_count_is_compact(net):
    # the design point is a sub-million-parameter segmentation net
    n = sum(p.numel() for p in net.parameters())
    assert 100_000 < n < 1_000_000
