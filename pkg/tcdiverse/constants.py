STREAM_MODELS = 101
"""
Random stream used to initialise the representation models and classifiers of
a collection. Member ``i`` draws from ``[seed, STREAM_MODELS, i]``.
"""

STREAM_CRITIC = 102
"""
Random stream used to initialise the variational critic.
"""

STREAM_SHUFFLE = 103
"""
Random stream that shuffles the training set into minibatches every epoch.
"""

STREAM_PERMUTATIONS = 104
"""
Random stream from which the permutation plans of the total correlation
estimator are drawn.
"""

STREAM_BASE = 201
"""
Random stream for the shared part of all dataset constructions: pool
selection, label noise, environment colours, and shuffling.
"""

STREAM_COMMON_CAUSE = 202
"""
Random stream for the common cause bits and the colour perturbations they
trigger.
"""

STREAM_COLOUR2 = 203
"""
Random stream for the second colour signal.
"""

STREAM_SHIFT = 204
"""
Random stream for shifted test sets.
"""

L2_GRID = (0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
"""
Regularisation strengths tried by the Ensemble and Linear protocols. The
strength with the best validation accuracy is used for testing.
"""

MNIST_DIR_ENV = "TCDIVERSE_MNIST_DIR"
"""
Environment variable naming the MNIST directory, used when neither the
configuration file nor the command line provides one.
"""
