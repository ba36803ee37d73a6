"""Jets compose like the maps they come from, and invert like them too."""
import numpy as np

from halflie.jets import Jet, compose, invert

# f(x) = x + x^2 at 0 and g(y) = sin y at 0, both as 3-jets
f = Jet.scalar(0.0, 0.0, [1.0, 1.0, 0.0])
g = Jet.scalar(0.0, 0.0, [1.0, 0.0, -1.0 / 6])
gf = compose(g, f)
print("sin(x + x^2) scaled Taylor coefficients:", [float(np.ravel(t)[0]) for t in gf.tensors()])
# sin(x + x^2) = x + x^2 - x^3/6 + ...
fi = invert(f)
print("inverse of x + x^2:", [float(np.ravel(t)[0]) for t in fi.tensors()])
print("round trip:", [float(np.ravel(t)[0]) for t in compose(fi, f).tensors()])
