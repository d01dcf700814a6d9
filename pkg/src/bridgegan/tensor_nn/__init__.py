from .autograd import (ShapeMismatch, Tensor, as_tensor, broadcast_to, concatenate, custom_op,
                       enable_grad, exp, grad, log, matmul, mean, no_grad, parameter, reshape,
                       sigmoid, softmax, sqrt, sum_to, tanh, transpose, tsum)
from .checkpoint import BadCheckpoint, load_checkpoint, save_checkpoint
from .layers import (DenseLayer, GraphAggregate, GraphEncoder, Module, NonPositiveTemperature,
                     RGCNLayer, dense_forward, graph_aggregate, gumbel_softmax, normalized_adjacency,
                     one_hot_argmax, rgcn_layer, sample_gumbel)
from .optim import (LrSchedule, Optimizer, OptimizerState, adam_step, clip_grad_norm, global_norm,
                    lr_at, lr_factor)
