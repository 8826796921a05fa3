# Bit-accurate emulator of the BFO additive-synthesis chip and the
# measurement harness for its digital quality figures.

__version__ = "0.1.0"

from . import baselines, cordic, engine, fxp, metrology, patch, regmap

__all__ = ["baselines", "cordic", "engine", "fxp", "metrology", "patch",
           "regmap", "__version__"]
