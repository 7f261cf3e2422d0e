"""Hybrid quantum-classical EEG emotion classifier.

Band-power preprocessing (``dsp``), a simulated 4-qubit variational circuit
(``qcircuit``), a dense softmax head (``neural``), joint training
(``hybrid``), metrics (``evaluation``) and a CLI (``cli``).
"""

__version__ = "0.1.0"
