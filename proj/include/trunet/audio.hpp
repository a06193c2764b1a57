#pragma once

#include <vector>

namespace trunet {

struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 16000;
};

}  // namespace trunet
