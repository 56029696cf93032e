"""Lane-kernel backend selection.

The compiled ``_lanes_c`` extension is used when it was built; otherwise the
pure-Python ``_lanes_py`` module. Setting ``DSPSIM_PURE=1`` forces the
fallback (the benchmark and the backend-equivalence tests rely on this).
"""
import os

if os.environ.get("DSPSIM_PURE", "") not in ("", "0"):
    from . import _lanes_py as _impl
else:
    try:
        from . import _lanes_c as _impl
    except ImportError:  # extension not built
        from . import _lanes_py as _impl

BACKEND = "cython" if _impl.__name__.endswith("_lanes_c") else "python"

vec_alu = _impl.vec_alu
dotp = _impl.dotp
shuffle = _impl.shuffle
add_rn = _impl.add_rn
mul_rn = _impl.mul_rn
clip = _impl.clip
mac = _impl.mac
extract = _impl.extract
insert = _impl.insert
bclr = _impl.bclr
bset = _impl.bset
cnt = _impl.cnt
ff1 = _impl.ff1
fl1 = _impl.fl1
clb = _impl.clb
divide = _impl.divide
