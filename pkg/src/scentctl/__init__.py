"""Heart-rate-variability driven scent release engine.

Pipeline: raw RR/HR/context streams -> sliding-window HRV features ->
smoothed arousal-valence estimate -> interaction state -> scent
expression -> constraint-checked release commands -> infrared device
commands. A session simulator replays synthetic or recorded traces
through the whole loop and emits an auditable event log.
"""

__version__ = "0.1.0"
