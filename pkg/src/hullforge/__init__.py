"""hullforge: constructive certificates for pole series whose graphs carry
nontrivial pluripolar hulls.

The package builds the counterexample pipeline end to end: pole layouts,
an explicit thin neighbourhood witnessed by a weighted log potential,
Monte-Carlo harmonic-measure certificates, exact Taylor-coefficient
machinery for the lacunary series, the coefficient selection induction,
and plurisubharmonic probe reports.  The ``hullforge`` CLI drives the
same pipeline from a JSON config.
"""

__version__ = "0.1.0"
