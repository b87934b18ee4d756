import numpy as np
import pytest

from hprmul.core import MulConfig
from hprmul.fault import FaultPlan, Mode
from hprmul.imaging import (SHARPEN_KERNEL, SMOOTH_KERNEL, ImageGray, Kernel5x5, PgmError,
                            encode_pgm, image_multiply, load_pgm, parse_pgm, save_pgm, sharpen,
                            smooth)
from hprmul.schemes import make_multiplier

from conftest import BENCH

EXACT = make_multiplier("exact", MulConfig(8, 4))
BENCH_NAMES = ["camera", "astronaut", "coffee", "chelsea", "moon", "coins"]


def img(arr):
    return ImageGray.from_array(np.asarray(arr, dtype=np.uint8))


# PGM ------------------------------------------------------------------------------

def test_pgm_round_trip(tmp_path):
    x = img([[0, 128], [255, 7]])
    assert encode_pgm(x) == b"P5\n2 2\n255\n" + bytes([0, 128, 255, 7])
    assert parse_pgm(encode_pgm(x)) == x
    assert parse_pgm(encode_pgm(x, ascii=True)) == x
    save_pgm(x, tmp_path / "x.pgm")
    assert load_pgm(tmp_path / "x.pgm") == x


def test_pgm_comments_and_whitespace():
    data = b"P2\n# made by hand\n2 2 # size\n255\n0 128\n# row\n255 7\n"
    assert parse_pgm(data) == img([[0, 128], [255, 7]])
    assert parse_pgm(b"P5 2 1 255\n\x01\x02") == img([[1, 2]])


@pytest.mark.parametrize("data,offset", [
    (b"P5\n2 2\n65535\n" + bytes(8), 7),
    (b"P5\n2 2\n255\n\x00\x01", 13),
    (b"P6\n2 2\n255\n" + bytes(12), 0),
    (b"P2\n2 x\n255\n1 2 3 4", 5),
    (b"P2\n2 2\n255\n1 2 300 4", 15),
    (b"P5\n2 2", 6),
])
def test_pgm_errors_carry_offsets(data, offset):
    with pytest.raises(PgmError) as e:
        parse_pgm(data)
    assert e.value.offset == offset
    assert f"byte offset {offset}" in str(e.value)


def test_image_validation():
    with pytest.raises(ValueError):
        ImageGray(2, 2, np.zeros(3))
    with pytest.raises(ValueError):
        ImageGray.from_array(np.array([[256]]))


def test_kernel_sums_checked():
    assert SHARPEN_KERNEL.divisor == 273 and SMOOTH_KERNEL.divisor == 60
    with pytest.raises(ValueError):
        Kernel5x5(SMOOTH_KERNEL.coefficients, 61)


# applications ---------------------------------------------------------------------

@pytest.mark.parametrize("a,b,out", [(255, 255, 255), (128, 255, 128), (100, 100, 39), (0, 9, 0)])
def test_multiply_examples(a, b, out):
    r = image_multiply(img([[a]]), img([[b]]), EXACT)
    assert int(r.pixels[0, 0]) == out


def test_multiply_dimension_mismatch():
    with pytest.raises(ValueError):
        image_multiply(img(np.zeros((2, 2))), img(np.zeros((2, 3))), EXACT)


@pytest.mark.parametrize("c", [0, 1, 77, 200, 255])
def test_filters_preserve_constants(c):
    x = img(np.full((6, 7), c))
    assert sharpen(x, EXACT) == x
    assert smooth(x, EXACT) == x


def test_filter_impulse():
    a = np.zeros((9, 9))
    a[4, 4] = 255
    s = smooth(img(a), EXACT).pixels
    assert s[4, 4] == 51  # 12*255/60
    assert s[4, 5] == 17  # 4*255/60
    assert s[2, 2] == 4   # 1*255/60 = 4.25
    sh = sharpen(img(a), EXACT).pixels
    assert sh[4, 4] == 255 and sh[4, 5] == 0 and sh[0, 0] == 0


def test_filters_reject_tiny_images():
    with pytest.raises(ValueError):
        smooth(img(np.zeros((4, 9))), EXACT)


@pytest.mark.parametrize("scheme", ["tmr", "rpr", "hpr"])
def test_fault_free_schemes_match_exact_on_benchmarks(scheme):
    for k in (2, 4, 6):
        mul = make_multiplier(scheme, MulConfig(8, k))
        for name in BENCH_NAMES[:3]:
            x = load_pgm(BENCH / f"{name}.pgm")
            assert sharpen(x, mul) == sharpen(x, EXACT)
            assert smooth(x, mul) == smooth(x, EXACT)
        x1, x2 = load_pgm(BENCH / "camera.pgm"), load_pgm(BENCH / "moon.pgm")
        assert image_multiply(x1, x2, mul) == image_multiply(x1, x2, EXACT)


def test_faulty_runs_deterministic_and_in_range():
    x = load_pgm(BENCH / "coins.pgm")
    mul = make_multiplier("hpr", MulConfig(8, 4))
    plan = FaultPlan(mode=Mode.INPUT, p_f=0.05, seed=3)
    a, b = smooth(x, mul, plan), smooth(x, mul, plan)
    assert a == b
    assert a != smooth(x, mul, FaultPlan(mode=Mode.INPUT, p_f=0.05, seed=4))
    assert a != smooth(x, EXACT)
    assert a.pixels.dtype == np.uint8 and (a.width, a.height) == (x.width, x.height)


def test_benchmark_images_present():
    for name in BENCH_NAMES:
        x = load_pgm(BENCH / f"{name}.pgm")
        assert (x.width, x.height) == (128, 128)
