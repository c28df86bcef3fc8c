"""Speech-based cognitive screening toolkit.

Extracts per-utterance disfluency features and sliding-window linguistic
complexity contours from transcribed speech, classifies speakers with a
from-scratch CNN and logistic regression, combines models by voting, feature
fusion, and stacking, and evaluates everything under seeded stratified
cross-validation.
"""

__version__ = "0.1.0"
