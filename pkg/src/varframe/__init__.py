"""Variable-length video classification: packed LSTM, aggregation, training and metrics."""

__version__ = "0.1.0"
