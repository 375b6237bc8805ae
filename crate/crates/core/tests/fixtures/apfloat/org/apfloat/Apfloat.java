package org.apfloat;

/**
 * Real number backed by a float mantissa.
 */
public class Apfloat extends Apcomplex {
    float value;
    long precision;

    public Apfloat(float value) {
        this.value = value;
        this.precision = 32L;
    }

    public Apfloat(long mantissa) {
        this.value = mantissa;
        this.precision = 64L;
    }

    /**
     * Parses text at the given precision.
     *
     * @param text decimal representation
     * @param precision working precision in bits
     * @throws NumberFormatException if the text is not a number
     */
    public Apfloat(String text, long precision) throws NumberFormatException {
        this.value = Float.parseFloat(text);
        this.precision = precision;
    }

    /**
     * Sign of this number: 1, -1, or 0.
     */
    public int signum() {
        if (this.value > 0.0f) {
            return 1;
        } else if (this.value < 0.0f) {
            return -1;
        } else {
            return 0;
        }
    }
}
