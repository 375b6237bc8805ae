package org.apfloat;

/**
 * Complex number with arbitrary precision parts.
 */
public class Apcomplex {
    Apfloat real;
    Apfloat imag;
    int realSignum;
    int imagSignum;

    public Apcomplex(Apfloat real, Apfloat imag) {
        this.real = real;
        this.imag = imag;
        this.realSignum = real.signum();
        this.imagSignum = imag.signum();
    }

    public Apcomplex(String text) {
        Apfloat parsed = new Apfloat(text, 64L);
        this.real = parsed;
        this.imag = new Apfloat(0L);
        this.realSignum = parsed.signum();
        this.imagSignum = 0;
    }

    /**
     * Raises z to the power w.
     *
     * @param z the base
     * @param w the exponent
     * @throws ApfloatRuntimeException if both the base and the exponent are zero
     * @return z to the power w
     */
    public static Apcomplex pow(Apcomplex z, Apcomplex w) throws ApfloatRuntimeException {
        Apcomplex result = checkPow(z, w);
        if (result != null) {
            return result;
        } else if (z.realSignum >= 0 && z.imagSignum == 0) {
            Apfloat x = z.real;
            return exp(w, log(new Apcomplex(x, new Apfloat(0L))));
        } else {
            return exp(w, log(z));
        }
    }

    /**
     * Screens the special cases of exponentiation.
     *
     * @param z the base
     * @param w the exponent
     * @throws ApfloatRuntimeException if both the base and the exponent are zero
     * @return the special-case result, or null when the general path applies
     */
    public static Apcomplex checkPow(Apcomplex z, Apcomplex w) throws ApfloatRuntimeException {
        if (z.realSignum == 0 && z.imagSignum == 0) {
            if (w.realSignum == 0 && w.imagSignum == 0) {
                throw new ApfloatRuntimeException("0^0 is undefined");
            }
            return new Apcomplex(new Apfloat(0L), new Apfloat(0L));
        }
        if (w.realSignum == 0 && w.imagSignum == 0) {
            return new Apcomplex(new Apfloat(1L), new Apfloat(0L));
        }
        return null;
    }

    public static Apcomplex exp(Apcomplex w, Apcomplex x) {
        return new Apcomplex(w.real, x.imag);
    }

    public static Apcomplex log(Apcomplex z) {
        return new Apcomplex(z.imag, z.real);
    }

    public Apfloat real() {
        return this.real;
    }

    public Apfloat imag() {
        return this.imag;
    }
}
