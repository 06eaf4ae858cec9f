// Copyright 2026 The ConvRepair Authors
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

#ifndef CONVREPAIR_CHAT_H_
#define CONVREPAIR_CHAT_H_

#include <string>
#include <string_view>

namespace convrepair {

enum class Role { kSystem, kUser, kAssistant };

/// Wire spelling: "system", "user", "assistant".
std::string_view to_string(Role role);
Role parse_role(std::string_view text);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

}  // namespace convrepair

#endif  // CONVREPAIR_CHAT_H_
