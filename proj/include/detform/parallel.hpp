#pragma once

#include <cstddef>
#include <functional>

namespace detform {

// Worker count used by nodewise loops; 1 (the default) runs inline.
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
// so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace detform
