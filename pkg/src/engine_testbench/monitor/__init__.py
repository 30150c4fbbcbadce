"""Instability early warning: synthetic signals, RQA features, linear SVM."""

from .signal import SignalConfig, gen_signal, format_signal, read_signal
from .rqa import RqaFeatures, embed, recurrence_matrix, rqa_features, window_features, autocorr_delay
from .svm import SvmModel, svm_train, svm_predict, svm_score, best_bias, objective
from .detect import (
    LabeledWindows, label_windows, evaluate_detector, simulate_runs, labeled_runs, stack,
    format_labeled, read_labeled, run_alarms, FEATURE_NAMES, LABELED_HEADER, WINDOW, HORIZON,
)
