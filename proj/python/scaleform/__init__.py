# Copyright (c) the Scaleform authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Scale-aware face restoration: fractional up-sampling, window-attention
encoder, toy decoder, degradation synthesis and metrics."""

from ._scaleform import (
    ConfigError,
    DimensionError,
    FormatError,
    NumericError,
    RangeError,
    UsageError,
    build_grid,
    default_config,
    degrade,
    gradcheck,
    psnr,
    read_image,
    resize_bilinear,
    restore,
    ssim,
    synth_face,
    train,
    write_image,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "FormatError",
    "NumericError",
    "RangeError",
    "UsageError",
    "build_grid",
    "default_config",
    "degrade",
    "gradcheck",
    "psnr",
    "read_image",
    "resize_bilinear",
    "restore",
    "ssim",
    "synth_face",
    "train",
    "write_image",
]
