// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace twinmesh {

// Shell-style match: `*` is any run (including empty), `?` any single
// character. No character classes or escapes.
bool glob_match(std::string_view pattern, std::string_view text);

}  // namespace twinmesh
