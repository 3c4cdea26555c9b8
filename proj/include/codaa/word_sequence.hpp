// include/codaa/word_sequence.hpp
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

#ifndef CODAA_WORD_SEQUENCE_HPP_
#define CODAA_WORD_SEQUENCE_HPP_

#include <stdexcept>
#include <vector>

namespace codaa {

struct LetterSpan {
  int letter = 0;
  int duration = 0;
};

// One word token: a frame span [begin, end) plus its inner letter alignment.
struct Segment {
  int word = 0;
  int begin = 0;
  int end = 0;
  std::vector<LetterSpan> letters;
};

// Segmentation of a single utterance. Segments tile [0, T) contiguously and
// letter durations within a segment sum to its length.
struct WordSequence {
  std::vector<Segment> segments;

  int total_frames() const {
    return segments.empty() ? 0 : segments.back().end;
  }

  // Throws if the sequence does not tile [0, frames) or if any segment's
  // letter durations disagree with its span.
  void check(int frames) const {
    int t = 0;
    for (const auto& seg : segments) {
      if (seg.begin != t || seg.end <= seg.begin) {
        throw std::runtime_error("word sequence does not tile utterance");
      }
      int d = 0;
      for (const auto& ls : seg.letters) {
        if (ls.duration < 1) throw std::runtime_error("letter duration < 1");
        d += ls.duration;
      }
      if (d != seg.end - seg.begin) {
        throw std::runtime_error("letter durations do not sum to segment length");
      }
      t = seg.end;
    }
    if (t != frames) {
      throw std::runtime_error("word sequence does not cover all frames");
    }
  }

  // Per-frame word ids and letter ids.
  void frame_labels(std::vector<int>* word, std::vector<int>* letter) const {
    word->clear();
    letter->clear();
    for (const auto& seg : segments) {
      for (const auto& ls : seg.letters) {
        for (int i = 0; i < ls.duration; ++i) {
          word->push_back(seg.word);
          letter->push_back(ls.letter);
        }
      }
    }
  }
};

}  // namespace codaa

#endif  // CODAA_WORD_SEQUENCE_HPP_
