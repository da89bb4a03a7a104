"""glemu: a guest language with twin engines, an in-language
self-emulator, and a differential-testing harness."""

__version__ = "0.1.0"
