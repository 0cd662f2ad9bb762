#pragma once

#include <string>

namespace mobman {

enum class TaskKind { OpenDrawer, OpenDoor, MoveBucket, PushChair };

const char* to_string(TaskKind task);
TaskKind task_from_string(const std::string& s);

enum class CarryBranch { Prehensile, Hug };

const char* to_string(CarryBranch branch);

}  // namespace mobman
