"""Frozen reference values, computed once with an independent 40-digit mpmath
summation over spin-j matrix elements (<m+1|S+|m> = sqrt((j-m)(j+m+1))).
They are not regenerated from the package.
"""

# relative phase state, p = 0: (<S_x>, Var S_x, Var S_y, Var S_z)
RELATIVE_PHASE_P0 = {
    2: (0.94280904158206337, 0.11111111111111111, 0.33333333333333333, 0.66666666666666667),
    4: (1.7797958971132712, 0.41212246173203726, 0.42020410288672876, 2.0),
    20: (8.1562154875209259, 6.1866316381777341, 0.62285061627938378, 36.666666666666667),
    100: (39.62126143335881, 129.33124944001991, 0.82439298941383149, 850.0),
    1000: (393.07864027477243, 12488.070270381566, 1.1122893544857674, 83500.0),
}

# relative phase state N = 10, p = 2: <S_x>, <S_y>, Var S_x, Var S_y
RELATIVE_PHASE_N10_P2 = (1.7426754985917447, -3.8159270643216749, 0.76531736730702342, 1.6364653790783544)
