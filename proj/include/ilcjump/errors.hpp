// Copyright 2026 The ilcjump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ilcjump {

/// Non-finite or otherwise invalid input handed to a model routine.
class ModelInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sequence or matrix sizes that disagree with the phase schedule.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Foot target outside the reachable annulus of a two-link leg.
class KinematicsError : public std::domain_error {
 public:
  KinematicsError(const std::string& what, int sample = -1)
      : std::domain_error(what), sample_(sample) {}
  int sample() const { return sample_; }

 private:
  int sample_;
};

/// Per-sample force distribution problem has no feasible point.
class InfeasibleForceError : public std::runtime_error {
 public:
  InfeasibleForceError(const std::string& what, int sample)
      : std::runtime_error(what), sample_(sample) {}
  int sample() const { return sample_; }

 private:
  int sample_;
};

/// Task file is malformed; `field` names the offending key path.
class TaskFileError : public std::runtime_error {
 public:
  TaskFileError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace ilcjump
