"""moil: motif-guided self-supervised pretraining for work-activity recognition.

Pipeline stages: load or synthesize multi-period sensor data, mine key
motifs from an initial unlabeled period, regress each period's motif
similarity series as a pretext task, then train a frozen-encoder classifier
on scarce labels and score micro-F1 per time step.
"""

__version__ = "0.1.0"
