from gcd import gcd
from toyunit import expect_eq, run


def test_gcd_coprime():
    expect_eq(1, gcd(7, 5))


def test_gcd_common_factor():
    expect_eq(4, gcd(12, 8))


def test_gcd_zero():
    expect_eq(9, gcd(9, 0))


if __name__ == "__main__":
    run([test_gcd_coprime, test_gcd_common_factor, test_gcd_zero])
