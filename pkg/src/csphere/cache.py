"""On-disk caching of quadrature rules and basis coefficient matrices.

Layout under the cache root (CSPHERE_CACHE env var, default .csphere-cache):

    rules/<hash>.csv        header line `# d,alpha,degree,count`, then one
                            node per row (coordinates..., weight)
    bases/<hash>.npz        basis coefficient arrays, binary
    bases/<hash>.json       metadata sidecar (d, max_level, rule hash, keys)

Entries are keyed by a content hash of (kind, d, degree), so a rule built
with different parameters never collides; corrupt entries are rebuilt.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .geometry import DiskQuadrature, SphereContext, SphereQuadrature

__all__ = ["CacheDir", "default_cache_root"]

ENV_VAR = "CSPHERE_CACHE"


def default_cache_root() -> Path:
    return Path(os.environ.get(ENV_VAR, ".csphere-cache"))


class CacheDir:
    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_root()

    def _rule_path(self, rule) -> Path:
        return self.root / "rules" / f"{rule.content_hash()}.csv"

    def _basis_paths(self, basis) -> tuple:
        key = f"d{basis.ctx.d}_{basis.rule.content_hash()}"
        return (self.root / "bases" / f"{key}.npz",
                self.root / "bases" / f"{key}.json")

    # -- rules ---------------------------------------------------------------

    def save_rule(self, rule) -> Path:
        path = self._rule_path(rule)
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(rule, DiskQuadrature):
            d = "-"
            alpha = rule.alpha
            coords = rule.nodes[:, None]
        elif isinstance(rule, SphereQuadrature):
            d = rule.ctx.d
            alpha = rule.ctx.alpha
            coords = rule.points
        else:
            raise TypeError("unknown rule type")
        lines = [f"# {d},{alpha!r},{rule.exact_degree},{rule.node_count}"]
        w = rule.weights
        for i in range(coords.shape[0]):
            parts = []
            for c in coords[i]:
                parts.extend([repr(float(c.real)), repr(float(c.imag))])
            parts.append(repr(float(w[i])))
            lines.append(",".join(parts))
        tmp = path.with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, path)
        return path

    def has_rule(self, rule) -> bool:
        return self._rule_path(rule).exists()

    # -- bases ---------------------------------------------------------------

    def save_basis(self, basis) -> Path:
        npz_path, json_path = self._basis_paths(basis)
        npz_path.parent.mkdir(parents=True, exist_ok=True)
        meta, arrays = basis.cache_payload()
        tmp = npz_path.with_suffix(".tmp.npz")
        np.savez(tmp, *arrays)
        os.replace(tmp, npz_path)
        tmpj = json_path.with_suffix(".tmp")
        tmpj.write_text(json.dumps(meta))
        os.replace(tmpj, json_path)
        return npz_path

    def load_basis(self, basis) -> bool:
        """Populate a fresh BasisSet from cache; returns False on miss or on
        a corrupt/incompatible entry (which is then removed)."""
        npz_path, json_path = self._basis_paths(basis)
        if not (npz_path.exists() and json_path.exists()):
            return False
        try:
            meta = json.loads(json_path.read_text())
            with np.load(npz_path) as data:
                arrays = [data[k] for k in data.files]
            basis.load_cache_payload(meta, arrays)
            return True
        except Exception:
            npz_path.unlink(missing_ok=True)
            json_path.unlink(missing_ok=True)
            return False

    # -- admin ---------------------------------------------------------------

    def status(self) -> dict:
        rules = sorted(p.name for p in (self.root / "rules").glob("*.csv")) \
            if (self.root / "rules").exists() else []
        bases = sorted(p.name for p in (self.root / "bases").glob("*.npz")) \
            if (self.root / "bases").exists() else []
        return {"root": str(self.root), "rules": rules, "bases": bases}

    def clear(self) -> int:
        removed = 0
        for sub, pattern in (("rules", "*.csv"), ("bases", "*.npz"), ("bases", "*.json")):
            folder = self.root / sub
            if folder.exists():
                for path in folder.glob(pattern):
                    path.unlink()
                    removed += 1
        return removed

    def warm(self, ctx: SphereContext, max_level: int) -> dict:
        """Pre-build and store the exact rule and bases for levels up to
        max_level.  A second call with the same key is a no-op."""
        from .geometry import build_sphere_rule
        from .spectral import BasisSet
        rule = build_sphere_rule(ctx, 2 * max_level)
        built = {"rule": False, "basis": False}
        if not self.has_rule(rule):
            self.save_rule(rule)
            built["rule"] = True
        basis = BasisSet(ctx, rule)
        if not self.load_basis(basis) or basis.max_level < max_level:
            basis.ensure(max_level)
            self.save_basis(basis)
            built["basis"] = True
        return built
