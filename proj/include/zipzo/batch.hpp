// Copyright 2026 The zipzo Authors. All Rights Reserved.
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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace zipzo {

// A minibatch: indices into an objective's dataset plus an identity tag.
// Empty indices mean "the whole training split".
struct Batch {
  std::vector<std::size_t> indices;
  std::uint64_t id = 0;
};

}  // namespace zipzo
