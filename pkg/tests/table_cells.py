"""Hand-transcribed reference cells for the scaling-order predictors.

Each entry: (predictor name, positional args, poly, logpow).  Values were
read off the reference tables independently of the implementation.
"""

from fractions import Fraction as F

SPOT_CELLS = [
    # mean source-to-anchor distance
    ("predicted_mean_anchor_distance", (2,), F(0), F(0)),
    ("predicted_mean_anchor_distance", (1.25,), F(1, 4), F(0)),
    ("predicted_mean_anchor_distance", (0.5,), F(1, 2), F(0)),
    ("predicted_mean_anchor_distance", (1.5,), F(0), F(1)),
    ("predicted_mean_anchor_distance", (1,), F(1, 2), F(-1)),
    # per-session anchor EMST factor (times sqrt q)
    ("predicted_LP", (3,), F(0), F(0)),
    ("predicted_LP", (2,), F(0), F(1)),
    ("predicted_LP", (0.5,), F(1, 2), F(0)),
    ("predicted_LP", (1,), F(1, 2), F(-1, 2)),
    # degree sum
    ("predicted_Q", (3,), F(1), F(0)),
    ("predicted_Q", (1.5,), F(3, 2), F(0)),
    ("predicted_Q", (0.5,), F(2), F(0)),
    ("predicted_Q", (1,), F(2), F(-1)),
    ("predicted_Q", (2,), F(1), F(1)),
    # broadcast transport complexity H(gamma, beta)
    ("predicted_H", (3, 3), F(1), F(0)),
    ("predicted_H", (2, 1.5), F(5, 4), F(0)),
    ("predicted_H", (0.5, 0.5), F(2), F(0)),
    ("predicted_H", (0.5, 3), F(2), F(0)),
    ("predicted_H", (1.75, 1.5), F(5, 4), F(0)),
    ("predicted_H", (1.75, 1.2), F(7, 5), F(0)),
    ("predicted_H", (1.5, 1), F(3, 2), F(1, 2)),
    ("predicted_H", (1, 2.5), F(2), F(-1)),
    ("predicted_H", (2, 2), F(1), F(1)),
    ("predicted_H", (3, 1), F(3, 2), F(-1, 2)),
    # multicast transport complexity G(beta, gamma, phi)
    ("predicted_G", (3, 0.5, 3), F(1), F(0)),
    ("predicted_G", (3, 2, 1.25), F(1), F(0)),
    ("predicted_G", (0.5, 0.5, 0.5), F(2), F(0)),
    ("predicted_G", (1, 1, 1.5), F(3, 2), F(1, 2)),
    ("predicted_G", (0.5, 1.2, 1.25), F(31, 20), F(0)),
    ("predicted_G", (1.5, 0.5, 1.75), F(5, 4), F(0)),
    ("predicted_G", (2, 1.5, 1), F(3, 2), F(-1)),
    ("predicted_G", (3, 1, 2), F(1), F(1)),
    ("predicted_G", (1.5, 2, 0.5), F(5, 4), F(0)),
    # destination sum W(gamma, phi)
    ("predicted_W", (0.5, 3), F(1), F(0)),
    ("predicted_W", (0.5, 1.5), F(3, 2), F(0)),
    ("predicted_W", (0.5, 0.5), F(2), F(0)),
    ("predicted_W", (1.2, 1.5), F(13, 10), F(0)),
    ("predicted_W", (1, 1), F(2), F(-2)),
    # summed anchor-EMST lower bounds, broadcast
    ("predicted_emst_sum_lower", (2, 3, "broadcast"), F(1), F(0)),
    ("predicted_emst_sum_lower", (0.5, 0.5, "broadcast"), F(2), F(0)),
    ("predicted_emst_sum_lower", (1.25, 1.5, "broadcast"), F(3, 2), F(0)),
    ("predicted_emst_sum_lower", (1, 1, "broadcast"), F(2), F(-3, 2)),
    ("predicted_emst_sum_lower", (1, 2, "broadcast"), F(3, 2), F(0)),
    # summed anchor-EMST lower bounds, multicast
    ("predicted_emst_sum_lower", (0.5, 2, "multicast", 2), F(1), F(1)),
    ("predicted_emst_sum_lower", (0.5, 2, "multicast", 1.5), F(1), F(2)),
    ("predicted_emst_sum_lower", (1.1, 3, "multicast", 1.25), F(23, 20), F(0)),
]
