"""Exit points of stationary SJ (Bernoulli-environment) LPP live on the N^{2/3} scale.

The table shows P(|Z| > M N^{2/3}) for a few M.  It should fall off fast,
roughly like exp(-c M^3).
"""
from lppsh import ejs_rains as E

tb = E.exit_tail_estimate("sj", Ns=(400,), Ms=(0.5, 1.0, 1.5, 2.0), replicas=300, seed=2)
print(tb.to_csv())
print("monotone in M:", tb.monotone, " slope of log p against M^3:", round(tb.slopes[400], 3))
