"""Trainable detection pipeline: features, anchors, RPN, RoI pooling, head, optimizer."""

from .anchors import assign_anchor_targets, generate_anchors
from .detector import Detection, detect, predict_on_boxes
from .features import FeatureMap, toy_feature_extractor
from .head import head_backward, head_forward, init_head_params
from .model import Model, ModelConfig, init_model
from .optim import OptimState, sgd_step
from .proposals import nms, propose
from .roi import roi_pool, roi_pool_backward
from .rpn import init_rpn_params, rpn_backward, rpn_forward
from .trainer import TrainConfig, train
