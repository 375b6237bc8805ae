package org.dm;

/**
 * Modular arithmetic helpers over doubles.
 */
public class DoubleModMath {
    double modulus;

    public DoubleModMath() {
        this.modulus = 97.0;
    }

    /**
     * Base raised to a nonnegative exponent, reduced by the modulus.
     */
    public double modPow(double base, long exponent) {
        if (exponent == 0L) {
            return 1.0;
        }
        return base * this.modPow(base, exponent - 1L) % this.modulus;
    }

    /**
     * Reduces the seed until it leaves the nonnegative range.
     */
    public long spin(long seed) {
        long acc = seed;
        while (acc >= 0L) {
            acc = acc % 1000000007L;
        }
        return acc;
    }

    /**
     * Multiplicative inverse modulo nothing in particular.
     */
    public double invert(double a) throws ArithmeticException {
        if (a == 0.0) {
            throw new ArithmeticException("not invertible");
        }
        return 1.0 / a;
    }
}
