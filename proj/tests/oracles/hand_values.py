"""Independent evaluation of the hand-derived reference values frozen in the unit tests."""
import math
from fractions import Fraction

sig = lambda v: 1.0 / (1.0 + math.exp(-v))

def cell(h, c, x, w=(0.5, 0.5)):
    z = w[0] * h + w[1] * x
    i = f = o = sig(z)
    g = math.tanh(z)
    c2 = f * c + i * g
    return o * math.tanh(c2), c2

print("sigmoid(ln3) =", repr(sig(math.log(3))))
h1, c1 = cell(0.0, 0.0, 1.0)
print("step1 i =", repr(sig(0.5)), "c =", repr(c1), "h =", repr(h1))
h2, c2 = cell(h1, c1, 1.0)
print("step2 c =", repr(c2), "h =", repr(h2))
# identity dense head from h_T to two logits: [0, h_T]
e = [math.exp(0.0), math.exp(h2)]
print("toy probs =", [repr(v / sum(e)) for v in e])
print("-ln 0.9 =", repr(-math.log(0.9)))
g = 4.0; m = 0.1 * g; v = 0.001 * g * g
mh = m / (1 - 0.9); vh = v / (1 - 0.999)
print("adam step =", repr(-0.001 * mh / (math.sqrt(vh) + 1e-8)))

# ROC by exhaustive threshold enumeration, positive = bad
scores = [0.9, 0.8, 0.4, 0.3]; bad = [1, 0, 1, 0]
pts = [(Fraction(0), Fraction(0))]
for thr in sorted(set(scores), reverse=True):
    tp = sum(1 for s, b in zip(scores, bad) if s >= thr and b)
    fp = sum(1 for s, b in zip(scores, bad) if s >= thr and not b)
    pts.append((Fraction(fp, 2), Fraction(tp, 2)))
pts.append((Fraction(1), Fraction(1)))
auc = sum((pts[k + 1][0] - pts[k][0]) * (pts[k + 1][1] + pts[k][1]) / 2 for k in range(len(pts) - 1))
print("roc =", [(str(a), str(b)) for a, b in pts], "auc =", auc)
