// Copyright 2026 The cupidkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not
// use this file except in compliance with the License.  You may obtain a copy
// of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  See the
// License for the specific language governing permissions and limitations
// under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace cupidkit {

// Base error. `code()` is the stable machine-parsable tag the CLI prints.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define CUPIDKIT_DEFINE_ERROR(Name, tag)                   \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(const std::string& msg) : Error(tag, msg) {} \
  }

CUPIDKIT_DEFINE_ERROR(ShapeMismatch, "shape_mismatch");
CUPIDKIT_DEFINE_ERROR(DegenerateDepth, "degenerate_depth");
CUPIDKIT_DEFINE_ERROR(SingularCamera, "singular_camera");
CUPIDKIT_DEFINE_ERROR(OutOfBounds, "out_of_bounds");
CUPIDKIT_DEFINE_ERROR(MaskMismatch, "mask_mismatch");
CUPIDKIT_DEFINE_ERROR(InsufficientCorrespondences, "insufficient_correspondences");
CUPIDKIT_DEFINE_ERROR(DegenerateConfiguration, "degenerate_configuration");
CUPIDKIT_DEFINE_ERROR(NoConsensus, "no_consensus");
CUPIDKIT_DEFINE_ERROR(EmptyDataset, "empty_dataset");
CUPIDKIT_DEFINE_ERROR(EmptySet, "empty_set");
CUPIDKIT_DEFINE_ERROR(TooSmall, "too_small");
CUPIDKIT_DEFINE_ERROR(EmptyScene, "empty_scene");
CUPIDKIT_DEFINE_ERROR(OverlappingMasks, "overlapping_masks");
CUPIDKIT_DEFINE_ERROR(EmptyGeneration, "empty_generation");
CUPIDKIT_DEFINE_ERROR(InvalidSpec, "invalid_spec");
CUPIDKIT_DEFINE_ERROR(IoError, "io");
CUPIDKIT_DEFINE_ERROR(FormatError, "format");
CUPIDKIT_DEFINE_ERROR(ConfigError, "config");
CUPIDKIT_DEFINE_ERROR(UsageError, "usage");

#undef CUPIDKIT_DEFINE_ERROR

}  // namespace cupidkit
