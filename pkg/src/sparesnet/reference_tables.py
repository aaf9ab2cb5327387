"""Published reference values for the two-good benchmark instances.

Every row is ``(C2_u, C2_d, tau_1, tau_2, S_1, S_2, model, sim)`` where
``model`` and ``sim`` are ``(P1(0), E[I1], P2(0), E[I2], TC)`` tuples.  Good 1
has an erlang(3) lifetime with mean 1, good 2 an erlang(6) lifetime with mean
2; ``mu_r = 1``, ``C1_u = 20``, ``C1_d = 40``, ``C_a = 0.25`` for both goods
and ``C_w = 0.5``.
"""

from __future__ import annotations

from .lifetime import LifetimeSpec

GOOD1_LIFETIME = LifetimeSpec.erlang(3, 3.0)
GOOD2_LIFETIME = LifetimeSpec.erlang(6, 3.0)
GOOD1_COSTS = {"C_u": 20.0, "C_d": 40.0, "C_a": 0.25}
GOOD2_C_A = 0.25
C_W = 0.5
MU_R = 1.0

# FCFS repair shop, one repairman
FCFS_K1 = [
    (10, 20, 0.5, 0.5, 4, 1, (0.63, 0.48, 0.9, 0.1, 47.79), (0.63, 0.47, 0.9, 0.1, 47.78)),
    (10, 20, 1, 0.5, 6, 1, (0.35, 1.2, 0.92, 0.08, 44.31), (0.36, 1.16, 0.92, 0.08, 44.39)),
    (10, 20, 2, 0.5, 7, 1, (0.21, 2.12, 0.91, 0.09, 44.29), (0.2, 2.08, 0.91, 0.09, 44.22)),
    (10, 20, 0.5, 1, 1, 4, (0.88, 0.12, 0.28, 1.27, 44.11), (0.88, 0.13, 0.28, 1.23, 44.04)),
    (10, 20, 0.5, 2, 2, 6, (0.8, 0.22, 0.05, 3.13, 40.24), (0.8, 0.21, 0.04, 3.09, 40.1)),
    (10, 20, 1, 1, 4, 1, (0.39, 0.98, 0.79, 0.21, 42.56), (0.4, 0.96, 0.79, 0.21, 42.53)),
    (10, 20, 1, 2, 2, 5, (0.67, 0.39, 0.07, 2.57, 38.37), (0.66, 0.38, 0.07, 2.5, 38.24)),
    (10, 20, 2, 1, 4, 2, (0.38, 1.05, 0.65, 0.4, 42.37), (0.38, 1.0, 0.65, 0.39, 42.38)),
    (10, 20, 2, 2, 2, 5, (0.6, 0.49, 0.07, 2.67, 38.27), (0.59, 0.48, 0.06, 2.59, 38.15)),
    (20, 20, 0.5, 0.5, 4, 1, (0.63, 0.48, 0.9, 0.1, 47.8), (0.63, 0.47, 0.9, 0.1, 47.79)),
    (20, 20, 1, 0.5, 6, 1, (0.35, 1.2, 0.92, 0.08, 44.32), (0.36, 1.16, 0.92, 0.08, 44.4)),
    (20, 20, 2, 0.5, 7, 1, (0.21, 2.12, 0.91, 0.09, 44.3), (0.2, 2.08, 0.91, 0.09, 44.23)),
    (20, 20, 0.5, 1, 1, 4, (0.88, 0.12, 0.28, 1.27, 44.72), (0.88, 0.13, 0.28, 1.23, 44.65)),
    (20, 20, 0.5, 2, 2, 4, (0.77, 0.25, 0.14, 1.82, 43.27), (0.78, 0.24, 0.13, 1.74, 43.19)),
    (20, 20, 1, 1, 4, 1, (0.39, 0.98, 0.79, 0.21, 42.74), (0.4, 0.96, 0.79, 0.21, 42.71)),
    (20, 20, 1, 2, 3, 3, (0.56, 0.58, 0.29, 1.1, 41.29), (0.56, 0.56, 0.29, 1.03, 41.33)),
    (20, 20, 2, 1, 4, 2, (0.38, 1.05, 0.65, 0.4, 42.67), (0.38, 1.0, 0.65, 0.39, 42.68)),
    (20, 20, 2, 2, 3, 4, (0.51, 0.68, 0.18, 1.62, 41.15), (0.51, 0.65, 0.18, 1.51, 41.14)),
]

# FCFS repair shop, five repairmen
FCFS_K5 = [
    (10, 20, 0.5, 0.5, 7, 6, (0.0, 4.51, 0.01, 3.7, 14.33), (0.01, 4.44, 0.01, 3.61, 14.29)),
    (10, 20, 1, 0.5, 5, 5, (0.0, 3.55, 0.01, 2.96, 20.3), (0.0, 3.66, 0.01, 2.94, 20.14)),
    (10, 20, 2, 0.5, 4, 5, (0.01, 2.73, 0.01, 2.97, 24.59), (0.0, 2.96, 0.01, 2.96, 24.35)),
    (10, 20, 0.5, 1, 6, 4, (0.0, 3.8, 0.0, 2.95, 14.16), (0.0, 3.82, 0.0, 2.95, 14.08)),
    (10, 20, 0.5, 2, 6, 3, (0.0, 3.83, 0.0, 2.37, 16.33), (0.0, 3.85, 0.0, 2.41, 16.25)),
    (10, 20, 1, 1, 4, 4, (0.01, 2.66, 0.0, 2.98, 20.49), (0.01, 2.72, 0.0, 2.98, 20.35)),
    (10, 20, 1, 2, 4, 3, (0.01, 2.66, 0.0, 2.37, 22.69), (0.01, 2.71, 0.0, 2.41, 22.57)),
    (10, 20, 2, 1, 4, 4, (0.01, 2.76, 0.0, 2.98, 24.82), (0.0, 2.98, 0.0, 2.97, 24.7)),
    (10, 20, 2, 2, 4, 3, (0.01, 2.76, 0.0, 2.37, 27.02), (0.0, 2.98, 0.0, 2.4, 26.9)),
    (20, 20, 0.5, 0.5, 7, 6, (0.0, 4.51, 0.01, 3.7, 14.41), (0.01, 4.44, 0.01, 3.61, 14.38)),
    (20, 20, 1, 0.5, 5, 5, (0.0, 3.55, 0.01, 2.96, 20.38), (0.0, 3.66, 0.01, 2.94, 20.23)),
    (20, 20, 2, 0.5, 4, 5, (0.01, 2.73, 0.01, 2.97, 24.67), (0.0, 2.96, 0.01, 2.96, 24.44)),
    (20, 20, 0.5, 1, 6, 4, (0.0, 3.8, 0.0, 2.95, 15.01), (0.0, 3.82, 0.0, 2.95, 14.94)),
    (20, 20, 0.5, 2, 6, 3, (0.0, 3.83, 0.0, 2.37, 19.62), (0.0, 3.85, 0.0, 2.41, 19.55)),
    (20, 20, 1, 1, 4, 4, (0.01, 2.66, 0.0, 2.98, 21.35), (0.01, 2.72, 0.0, 2.98, 21.2)),
    (20, 20, 1, 2, 4, 3, (0.01, 2.66, 0.0, 2.37, 25.99), (0.01, 2.71, 0.0, 2.41, 25.87)),
    (20, 20, 2, 1, 4, 4, (0.01, 2.76, 0.0, 2.98, 25.67), (0.0, 2.98, 0.0, 2.97, 25.56)),
    (20, 20, 2, 2, 4, 3, (0.01, 2.76, 0.0, 2.37, 30.32), (0.0, 2.98, 0.0, 2.4, 30.2)),
]

# preemptive priority (good 1 first), one repairman
PRIORITY_K1 = [
    (10, 20, 0.5, 0.5, 3, 1, (0.54, 0.62, 0.99, 0.01, 46.69), (0.54, 0.62, 0.99, 0.01, 46.64)),
    (10, 20, 1, 0.5, 5, 1, (0.25, 1.62, 0.99, 0.01, 43.02), (0.25, 1.64, 0.99, 0.01, 42.95)),
    (10, 20, 2, 0.5, 7, 1, (0.11, 3.2, 0.98, 0.02, 43.72), (0.1, 3.35, 0.97, 0.03, 43.36)),
    (10, 20, 0.5, 1, 1, 3, (0.68, 0.32, 0.69, 0.4, 45.45), (0.68, 0.32, 0.69, 0.4, 45.41)),
    (10, 20, 0.5, 2, 1, 4, (0.68, 0.32, 0.48, 0.85, 42.96), (0.68, 0.32, 0.48, 0.86, 42.79)),
    (10, 20, 1, 1, 2, 2, (0.38, 0.82, 0.82, 0.21, 42.45), (0.38, 0.82, 0.82, 0.22, 42.52)),
    (10, 20, 1, 2, 1, 5, (0.56, 0.44, 0.31, 1.52, 39.48), (0.56, 0.44, 0.3, 1.54, 39.35)),
    (10, 20, 2, 1, 2, 3, (0.31, 0.98, 0.73, 0.37, 42.18), (0.3, 0.98, 0.73, 0.38, 42.2)),
    (10, 20, 2, 2, 1, 6, (0.51, 0.49, 0.22, 2.11, 39.08), (0.51, 0.49, 0.22, 2.14, 38.95)),
    (20, 20, 0.5, 0.5, 3, 1, (0.54, 0.62, 0.99, 0.01, 46.69), (0.54, 0.62, 0.99, 0.01, 46.64)),
    (20, 20, 1, 0.5, 5, 1, (0.25, 1.62, 0.99, 0.01, 43.02), (0.25, 1.64, 0.99, 0.01, 42.95)),
    (20, 20, 2, 0.5, 7, 1, (0.11, 3.2, 0.98, 0.02, 43.72), (0.1, 3.35, 0.97, 0.03, 43.37)),
    (20, 20, 0.5, 1, 1, 3, (0.68, 0.32, 0.69, 0.4, 45.71), (0.68, 0.32, 0.69, 0.4, 45.67)),
    (20, 20, 0.5, 2, 1, 4, (0.68, 0.32, 0.48, 0.85, 44.66), (0.68, 0.32, 0.48, 0.86, 44.51)),
    (20, 20, 1, 1, 2, 2, (0.38, 0.82, 0.82, 0.21, 42.61), (0.38, 0.82, 0.82, 0.22, 42.67)),
    (20, 20, 1, 2, 1, 5, (0.56, 0.44, 0.31, 1.52, 41.76), (0.56, 0.44, 0.3, 1.54, 41.65)),
    (20, 20, 2, 1, 2, 3, (0.31, 0.98, 0.73, 0.37, 42.41), (0.3, 0.98, 0.73, 0.38, 42.43)),
    (20, 20, 2, 2, 2, 4, (0.31, 0.98, 0.54, 0.77, 41.52), (0.3, 0.98, 0.55, 0.8, 41.5)),
]

# value of priority: (C1_u, C1_d, C2_u, C2_d, priority (tau1, tau2, S1, S2, TC), fcfs (tau1, tau2, S1, S2, TC), diff %)
PRIORITY_VALUE = [
    (1, 20, 1, 5, (5, 5, 7, 1, 9.55), (5, 5, 7, 1, 9.92), -4),
    (1, 20, 5, 5, (5, 2, 7, 1, 9.65), (5, 2, 8, 1, 10.43), -8),
    (1, 40, 1, 5, (5, 5, 10, 1, 11.18), (5, 5, 12, 1, 12.65), -13),
    (1, 40, 5, 5, (5, 2, 10, 1, 11.25), (5, 3, 12, 1, 13.04), -16),
    (5, 20, 5, 5, (5, 2, 6, 1, 13.23), (5, 2, 6, 1, 13.74), -4),
    (5, 40, 1, 5, (5, 5, 9, 1, 14.9), (5, 5, 11, 1, 16.18), -9),
    (5, 40, 5, 5, (5, 2, 10, 1, 14.98), (5, 3, 12, 1, 16.6), -11),
    (1, 10, 20, 5, (5, 1, 5, 1, 8.56), (5, 1, 5, 1, 8.95), -5),
    (1, 20, 10, 5, (5, 1, 7, 1, 9.69), (5, 1, 8, 1, 10.74), -11),
    (1, 20, 20, 5, (5, 1, 7, 1, 9.72), (5, 1, 8, 1, 10.87), -12),
    (1, 40, 10, 5, (5, 1, 10, 1, 11.28), (5, 2, 13, 1, 13.33), -18),
    (1, 40, 1, 10, (5, 5, 9, 1, 15.95), (5, 5, 10, 1, 16.55), -4),
    (1, 40, 20, 5, (5, 1, 10, 1, 11.3), (5, 1, 13, 1, 13.43), -19),
    (1, 40, 5, 10, (5, 4, 10, 1, 16.04), (5, 5, 11, 1, 17.01), -6),
    (5, 20, 10, 5, (5, 1, 6, 1, 13.28), (5, 1, 7, 1, 14.05), -6),
    (5, 20, 20, 5, (5, 1, 6, 1, 13.31), (5, 1, 7, 1, 14.19), -7),
    (5, 40, 10, 5, (5, 1, 10, 1, 15.01), (5, 2, 12, 1, 16.89), -13),
    (5, 40, 20, 5, (5, 1, 10, 1, 15.03), (5, 1, 12, 1, 16.99), -13),
    (5, 40, 5, 10, (5, 4, 9, 1, 19.75), (5, 5, 10, 1, 20.5), -4),
    (1, 20, 20, 10, (5, 1, 7, 1, 14.55), (5, 1, 7, 1, 15.1), -4),
    (1, 40, 10, 10, (5, 2, 10, 1, 16.12), (5, 2, 11, 1, 17.46), -8),
    (1, 40, 20, 10, (5, 1, 10, 1, 16.18), (5, 1, 12, 1, 17.91), -11),
    (5, 40, 10, 10, (5, 2, 9, 1, 19.84), (5, 2, 11, 1, 20.97), -6),
    (5, 40, 20, 10, (5, 1, 9, 1, 19.9), (5, 1, 11, 1, 21.44), -8),
]
