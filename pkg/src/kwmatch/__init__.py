"""Fine-grained question matching over learned keyword importance."""
