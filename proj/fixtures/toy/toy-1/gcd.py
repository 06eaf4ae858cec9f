"""Greatest common divisor."""


def gcd(a, b):
    while b != 0:
        a, b = a, a % b
    return a
