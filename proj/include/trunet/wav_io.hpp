#pragma once

#include <string>

#include "trunet/audio.hpp"

namespace trunet {

enum class WavFormat { pcm16, float32 };

// RIFF/WAVE reader for mono 16 kHz PCM16 or IEEE float32 files. PCM16 samples
// are scaled by 1/32768. Anything else (stereo, other rates, other codecs) is
// rejected with a message saying what to convert to.
AudioBuffer wav_read(const std::string& path);

// float32 output is lossless for float-valued samples; pcm16 clips to
// [-1, 32767/32768] and rounds.
void wav_write(const std::string& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::float32);

}  // namespace trunet
