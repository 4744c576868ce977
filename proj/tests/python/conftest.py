import glob
import importlib.util
import os
import sys

# Under ctest, import the package built in the build tree rather than any installed copy.
_pkg = os.environ.get("LDM_PY_PKG")
if _pkg:
    _dir = os.path.join(_pkg, "ldm_al")
    (_so,) = glob.glob(os.path.join(_dir, "_ldm*.so"))
    _ext_spec = importlib.util.spec_from_file_location("ldm_al._ldm", _so)
    _ext = importlib.util.module_from_spec(_ext_spec)
    _ext_spec.loader.exec_module(_ext)
    sys.modules["ldm_al._ldm"] = _ext

    _spec = importlib.util.spec_from_file_location(
        "ldm_al", os.path.join(_dir, "__init__.py"), submodule_search_locations=[_dir]
    )
    _mod = importlib.util.module_from_spec(_spec)
    _mod._ldm = _ext
    sys.modules["ldm_al"] = _mod
    _spec.loader.exec_module(_mod)
