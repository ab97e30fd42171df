"""Exit criteria of the package, one test per criterion.

Each test records a one-line verdict that is printed in the pytest terminal
summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from conftest import band_limited, record
from fdmi.analysis import StarChart, measure_limiting_radius, psnr, siemens_star, spectrum_report
from fdmi.codec import CaptureConfig, decode_all, encode, extract_baseband, extract_sideband, simulate_capture
from fdmi.exceptions import ParseError
from fdmi.flow import estimate_flow, flow_error, interpolate_frames, textured_image
from fdmi.fourier import forward_spectrum, inverse_spectrum, prefilter
from fdmi.imageio import decode_image, encode_image
from fdmi.masks import MaskSpec, make_mask
from fdmi.plan import PlanEntry, SidebandPlan, check_plan, plan_sidebands
from test_plan import forced_overlap

pytestmark = pytest.mark.acceptance


def test_criterion_1_twelve_sideband_round_trip(natural_crops):
    start = time.perf_counter()
    plan = plan_sidebands(12)
    r = plan.entries[0].band_radius
    frames = band_limited(natural_crops, r)
    coded = encode(frames, np.stack([make_mask(m, 512, 512) for m in plan.masks]))
    out = decode_all(coded, plan, workers=1)
    elapsed = time.perf_counter() - start
    scores = [psnr(out[i], frames[i]) for i in range(12)]
    ok = len(set(map(tuple, (m.carrier for m in plan.masks)))) == 12 and min(scores) >= 35 and elapsed <= 10
    record(1, "twelve-sideband round trip", ok,
           f"radius {r:.4f}, min PSNR {min(scores):.1f} dB (>= 35), {elapsed:.2f} s (<= 10)")
    assert min(scores) >= 35
    assert elapsed <= 10


def test_criterion_2_resolution_halving():
    size, cycles = 512, 36
    star = siemens_star(size, size, cycles)
    full = measure_limiting_radius(star, 0.1)
    nyq = MaskSpec("square", 0.5, 0.0, 0.5, 0.5)
    coded = encode([star.image], [make_mask(nyq, size, size)])
    recovered = extract_sideband(coded, PlanEntry(nyq, 0.25))
    masked = measure_limiting_radius(StarChart(recovered, cycles, star.center), 0.1)
    ratio = full.resolution / masked.resolution
    ok = abs(ratio - 2.0) <= 0.2
    record(2, "resolution halving", ok,
           f"{full.resolution:.1f} -> {masked.resolution:.1f} lw/ph "
           f"(radius {full.limiting_radius:.0f} -> {masked.limiting_radius:.0f} px), ratio {ratio:.3f} (2.0 +- 10%)")
    assert ok


def test_criterion_3_baseband_is_full_exposure(natural_crops):
    plan = plan_sidebands(2, "square")
    frames = band_limited(natural_crops[[0, 3]], plan.entries[0].band_radius)
    durations = [30.0, 15.0]
    coded = encode(frames, np.stack([make_mask(m, 512, 512) for m in plan.masks]), durations=durations)
    base = extract_baseband(coded, plan.baseband_radius, plan, durations)
    truth = prefilter((30 * frames[0] + 15 * frames[1]) / 45, plan.baseband_radius)
    score = psnr(base, truth)
    record(3, "baseband = full exposure", score >= 40, f"PSNR {score:.1f} dB (>= 40)")
    assert score >= 40


def test_criterion_4_square_harmonic_law():
    w, period = 1024, 256
    spec = MaskSpec("square", 1 / period, 0.0, 0.5, 0.5, math.pi / (2 * period))
    mag = np.abs(np.fft.fft2(make_mask(spec, w, 16)))[0] / (w * 16)
    base = w // period
    fundamental = mag[base]
    odd_err = max(abs(mag[k * base] * k / fundamental - 1) for k in (1, 3, 5, 7))
    abs_err = max(abs(mag[k * base] / (2 * spec.b / (math.pi * k)) - 1) for k in (1, 3, 5, 7))
    even = max(mag[k * base] / fundamental for k in (2, 4, 6, 8))
    ok = odd_err <= 0.02 and abs_err <= 0.02 and even < 1e-6
    record(4, "square-wave harmonic law", ok,
           f"odd 1/k deviation {odd_err:.2e}, vs 2b/(pi k) {abs_err:.2e} (<= 2%), even/fundamental {even:.1e} (< 1e-6)")
    assert ok


def test_criterion_5_planner_soundness():
    rng = np.random.default_rng(2024)
    plans, bad = [], []
    for waveform in ("cosine", "square"):
        for n in range(1, 17):
            plan = plan_sidebands(n, waveform, "auto")
            plans.append(plan)
            if check_plan(plan):
                bad.append((waveform, n))
    accepted = sum(1 for k in range(1000) if not check_plan(forced_overlap(plans[k % len(plans)], rng)))
    ok = not bad and accepted == 0
    record(5, "planner soundness", ok,
           f"{len(plans) - len(bad)}/32 auto plans clean, {1000 - accepted}/1000 forced overlaps rejected")
    assert not bad
    assert accepted == 0


def _blob_centroid(frame, box):
    (y0, y1), (x0, x1) = box
    win = frame[y0:y1, x0:x1]
    weight = np.clip(win - 0.55, 0, None)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    return np.array([(weight * xx).sum(), (weight * yy).sum()]) / weight.sum()


def test_criterion_6_flow_interpolation():
    size = 256
    y, x = np.mgrid[0:size, 0:size]
    tex = 0.4 * textured_image(size, size, seed=6, sigma=2.0)
    blob = 0.6 * np.exp(-((x - 100.0) ** 2 + (y - 120.0) ** 2) / (2 * 5.0**2))
    img1 = tex + blob
    img2 = np.roll(img1, (2, 6), axis=(0, 1))
    flow = estimate_flow(img1, img2)
    err = flow_error(flow, 6, 2, border=16)
    frames = interpolate_frames(img1, img2, flow, 16)
    box = ((95, 150), (75, 130))
    cents = np.array([_blob_centroid(f, box) for f in frames])
    k = np.arange(16)
    dev = 0.0
    for axis in range(2):
        fit = np.polyval(np.polyfit(k, cents[:, axis], 1), k)
        dev = max(dev, np.abs(cents[:, axis] - fit).max())
    travel = cents[-1] - cents[0]
    ok = len(frames) == 16 and err <= 0.2 and dev <= 0.5 and np.allclose(travel, [6, 2], atol=0.5)
    record(6, "flow interpolation", ok,
           f"16 frames, median flow error {err:.3f} px (<= 0.2), centroid deviation from line {dev:.3f} px (<= 0.5), "
           f"travel ({travel[0]:.2f}, {travel[1]:.2f})")
    assert ok


def test_criterion_7_transform_identities():
    rng = np.random.default_rng(7)
    worst_rt = worst_parseval = worst_herm = 0.0
    for _ in range(100):
        h, w = rng.integers(1, 65, size=2)
        img = rng.normal(size=(h, w)) * rng.uniform(0.1, 10)
        spec = forward_spectrum(img)
        worst_rt = max(worst_rt, np.sqrt(np.mean((inverse_spectrum(spec) - img) ** 2)))
        energy = np.sum(img**2)
        worst_parseval = max(worst_parseval, abs(np.sum(np.abs(spec) ** 2) / (w * h) - energy) / energy)
        s = np.fft.ifftshift(spec)
        mirror = np.conj(np.roll(s[::-1, ::-1], (1, 1), axis=(0, 1)))
        worst_herm = max(worst_herm, np.abs(s - mirror).max() / np.abs(s).max())
    ok = worst_rt < 1e-9 and worst_parseval < 1e-9 and worst_herm < 1e-9
    record(7, "transform identities", ok,
           f"round-trip RMS {worst_rt:.1e}, Parseval rel {worst_parseval:.1e}, Hermitian rel {worst_herm:.1e} (< 1e-9)")
    assert ok


def test_criterion_8_io_bit_exactness():
    rng = np.random.default_rng(8)
    pfm_ok = p16_ok = True
    for _ in range(50):
        h, w = rng.integers(1, 40, size=2)
        img = rng.normal(size=(h, w)).astype(np.float32)
        back = decode_image(encode_image(img, "pfm")).astype(np.float32)
        pfm_ok &= np.array_equal(back.view(np.uint32), img.view(np.uint32))
        unit = rng.random((h, w))
        p16_ok &= bool(np.all(np.abs(decode_image(encode_image(unit, "p5-16")) - unit) <= 1 / 65535))
    plan = plan_sidebands(12)
    plan_ok = SidebandPlan.from_json(plan.to_json()) == plan
    crashes = 0
    prefixes = [b"", b"P5\n", b"Pf\n", b"P5\n8 8\n", b"Pf\n4 4\n", b"P5\n2 2\n255\n"]
    for i in range(1000):
        data = prefixes[i % len(prefixes)] + rng.bytes(64)
        try:
            decode_image(data)
        except ParseError:
            pass
        except Exception:  # noqa: BLE001 - any other exception is a crash
            crashes += 1
    ok = pfm_ok and p16_ok and plan_ok and crashes == 0
    record(8, "I/O bit-exactness", ok,
           f"PFM bit-exact {pfm_ok}, P5-16 within 1/65535 {p16_ok}, plan JSON equal {plan_ok}, "
           f"fuzz crashes {crashes}/1000")
    assert ok


def test_criterion_9_pitch_ratio():
    size = 384
    plan = SidebandPlan((PlanEntry(MaskSpec("square", 0.5, 0.0), 0.1),), 0.05)
    scene = 0.5 + 0.5 * textured_image(size, size, seed=9, sigma=8.0)
    coded = simulate_capture(CaptureConfig(plan, pitch_ratio=3), [scene])
    top = spectrum_report(coded)[0]
    bins = abs(top.u - 0.5 / 3) * size
    ok = bins <= 1 and top.v == 0
    record(9, "pitch-ratio model", ok,
           f"dominant carrier at ({top.u:.4f}, {top.v:.4f}) cycles/sensor-pixel, {bins:.2f} bins from 1/6 (<= 1)")
    assert ok

