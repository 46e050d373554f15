"""
A user-defined partition and the command line
=============================================

Any piecewise-constant scale function can be assembled from boxes, balls
and 1D intervals. Here a step along a slanted strip is approximated from
scattered data, then the same job runs through ``mlsvsdk approximate``.
"""

import os
import subprocess
import sys
import tempfile

import numpy as np

import mlsvsdk as mv

box = mv.DomainBox.cube(0.0, 1.0, 2)
nodes = mv.halton_nodes(2000, 2, box)
inside = mv.Box((0.3, 0.0), (0.6, 1.0))
f = np.where(inside.contains(nodes.points), 1.0 + nodes.points[:, 1], 0.0)
nodes = nodes.with_values(f)

sf = mv.ScaleFunction(((inside, 1.0),), fallback_beta=0.0)
cfg = mv.MlsConfig(mv.PolynomialBasis(2, 1), mv.WeightSpec("matern_c6", 40.0), scale_fn=sf)
grid = mv.uniform_nodes(box, [101, 101]).points
truth = np.where(inside.contains(grid), 1.0 + grid[:, 1], 0.0)
print("rmse", mv.rmse(mv.evaluate_many(cfg, nodes, grid), truth))

###############################################################################
# The same scale function, written as a YAML config for the CLI.

import yaml

tmp = tempfile.mkdtemp()
mv.write_nodes_csv(os.path.join(tmp, "nodes.csv"), nodes)
with open(os.path.join(tmp, "approx.yaml"), "w") as fh:
    yaml.safe_dump({"weight": "matern_c6", "epsilon": 40, "scale_function": sf.to_dict()}, fh)
subprocess.run(
    [sys.executable, "-m", "mlsvsdk.cli", "approximate", "-n", "nodes.csv", "-c", "approx.yaml",
     "-g", "0:1:101,0:1:101", "-o", "out.csv"],
    cwd=tmp,
    check=True,
)
out = mv.read_nodes_csv(os.path.join(tmp, "out.csv"), require_values=True)
print("cli rmse", mv.rmse(out.values, truth))
