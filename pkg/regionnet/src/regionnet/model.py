"""Compact bottleneck encoder-decoder for binary region segmentation.

A 0.36M-parameter segmentation net: an initial conv/pool block, an
asymmetric encoder (two downsampling stages, then dilated / factorized /
regular bottlenecks) and a light decoder back to input resolution. Two
choices matter for thin path bands: downsampling bottlenecks pool their
main branch with average pooling rather than max pooling, and the decoder's
main branch upsamples bilinearly rather than max-unpooling, so no pooling
indices cross the network.
"""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F


class InitialBlock(nn.Module):
    """Strided conv concatenated with an avg-pooled copy of the input."""

    def __init__(self, in_ch: int = 3, out_ch: int = 16):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch - in_ch, 3, stride=2, padding=1, bias=False)
        # ceil mode so odd inputs agree with the conv branch's size
        self.pool = nn.AvgPool2d(2, stride=2, ceil_mode=True)
        self.bn = nn.BatchNorm2d(out_ch)
        self.act = nn.PReLU(out_ch)

    def forward(self, x):
        x = torch.cat([self.conv(x), self.pool(x)], dim=1)
        return self.act(self.bn(x))


def _conv_unit(kind: str, ch: int, dilation: int) -> nn.Sequential:
    if kind == "regular":
        conv: list[nn.Module] = [nn.Conv2d(ch, ch, 3, padding=1, bias=False)]
    elif kind == "dilated":
        conv = [nn.Conv2d(ch, ch, 3, padding=dilation, dilation=dilation, bias=False)]
    elif kind == "asymmetric":
        conv = [
            nn.Conv2d(ch, ch, (5, 1), padding=(2, 0), bias=False),
            nn.Conv2d(ch, ch, (1, 5), padding=(0, 2), bias=False),
        ]
    else:
        raise ValueError(f"unknown bottleneck kind {kind!r}")
    return nn.Sequential(*conv, nn.BatchNorm2d(ch), nn.PReLU(ch))


class Bottleneck(nn.Module):
    """Residual unit: 1x1 reduce, spatial conv, 1x1 expand, dropout, add."""

    def __init__(self, ch: int, kind: str = "regular", dilation: int = 1, dropout: float = 0.1):
        super().__init__()
        inner = max(ch // 4, 1)
        self.ext = nn.Sequential(
            nn.Conv2d(ch, inner, 1, bias=False),
            nn.BatchNorm2d(inner),
            nn.PReLU(inner),
            _conv_unit(kind, inner, dilation),
            nn.Conv2d(inner, ch, 1, bias=False),
            nn.BatchNorm2d(ch),
            nn.Dropout2d(dropout),
        )
        self.act = nn.PReLU(ch)

    def forward(self, x):
        return self.act(x + self.ext(x))


class DownBottleneck(nn.Module):
    """Halves resolution: avg-pooled, zero-padded main branch plus a strided
    conv ext branch."""

    def __init__(self, in_ch: int, out_ch: int, dropout: float):
        super().__init__()
        inner = max(in_ch // 4, 1)
        self.pool = nn.AvgPool2d(2, stride=2)
        self.pad_ch = out_ch - in_ch
        self.ext = nn.Sequential(
            nn.Conv2d(in_ch, inner, 2, stride=2, bias=False),
            nn.BatchNorm2d(inner),
            nn.PReLU(inner),
            _conv_unit("regular", inner, 1),
            nn.Conv2d(inner, out_ch, 1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.Dropout2d(dropout),
        )
        self.act = nn.PReLU(out_ch)

    def forward(self, x):
        main = self.pool(x)
        main = F.pad(main, (0, 0, 0, 0, 0, self.pad_ch))
        return self.act(main + self.ext(x))


class UpBottleneck(nn.Module):
    """Doubles resolution to an exact target size; bilinear on the main
    branch, transposed conv on the ext branch."""

    up_mode = "bilinear"

    def __init__(self, in_ch: int, out_ch: int, dropout: float):
        super().__init__()
        inner = max(in_ch // 4, 1)
        self.main = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 1, bias=False),
            nn.BatchNorm2d(out_ch),
        )
        self.reduce = nn.Sequential(
            nn.Conv2d(in_ch, inner, 1, bias=False),
            nn.BatchNorm2d(inner),
            nn.PReLU(inner),
        )
        self.tconv = nn.ConvTranspose2d(
            inner, inner, 3, stride=2, padding=1, output_padding=1, bias=False
        )
        self.expand = nn.Sequential(
            nn.BatchNorm2d(inner),
            nn.PReLU(inner),
            nn.Conv2d(inner, out_ch, 1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.Dropout2d(dropout),
        )
        self.act = nn.PReLU(out_ch)

    def forward(self, x, size: tuple[int, int]):
        main = F.interpolate(
            self.main(x), size=size, mode=self.up_mode, align_corners=False
        )
        ext = self.tconv(self.reduce(x))
        if ext.shape[2:] != torch.Size(size):
            # odd encoder sizes: nudge the deconv output onto the target grid
            ext = F.interpolate(ext, size=size, mode=self.up_mode, align_corners=False)
        return self.act(main + self.expand(ext))


class RegionNet(nn.Module):
    """Full network: 3-stage encoder, 2-stage decoder, 2-class logits at
    input resolution."""

    def __init__(self, in_channels: int = 3, classes: int = 2):
        super().__init__()
        self.initial = InitialBlock(in_channels, 16)
        self.down1 = DownBottleneck(16, 64, dropout=0.01)
        self.stage1 = nn.ModuleList([Bottleneck(64, dropout=0.01) for _ in range(4)])
        self.down2 = DownBottleneck(64, 128, dropout=0.1)
        mid = [
            ("regular", 1), ("dilated", 2), ("asymmetric", 1), ("dilated", 4),
            ("regular", 1), ("dilated", 8), ("asymmetric", 1), ("dilated", 16),
        ]
        self.stage2 = nn.ModuleList(
            [Bottleneck(128, kind, dil, dropout=0.1) for kind, dil in mid]
        )
        self.stage3 = nn.ModuleList(
            [Bottleneck(128, kind, dil, dropout=0.1) for kind, dil in mid]
        )
        self.up4 = UpBottleneck(128, 64, dropout=0.1)
        self.stage4 = nn.ModuleList([Bottleneck(64, dropout=0.1) for _ in range(2)])
        self.up5 = UpBottleneck(64, 16, dropout=0.1)
        self.stage5 = nn.ModuleList([Bottleneck(16, dropout=0.1)])
        self.fullconv = nn.ConvTranspose2d(16, classes, 3, stride=2, padding=1, bias=False)

    def forward(self, x):
        full = x.shape[2:]
        x = self.initial(x)
        size_a = x.shape[2:]
        x = self.down1(x)
        for block in self.stage1:
            x = block(x)
        size_b = x.shape[2:]
        x = self.down2(x)
        for block in self.stage2:
            x = block(x)
        for block in self.stage3:
            x = block(x)
        x = self.up4(x, size_b)
        for block in self.stage4:
            x = block(x)
        x = self.up5(x, size_a)
        for block in self.stage5:
            x = block(x)
        return self.fullconv(x, output_size=full)
