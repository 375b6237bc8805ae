package org.apfloat;

public class ApfloatRuntimeException extends RuntimeException {
    public ApfloatRuntimeException(String message) {
        this.message = message;
    }
}
