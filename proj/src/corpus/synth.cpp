// Copyright 2026 The bookgr Authors.
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

#include <algorithm>
#include <cstdio>
#include <array>
#include <cctype>
#include <random>
#include <set>

#include "bookgr/corpus.hpp"
#include "bookgr/error.hpp"

namespace bookgr {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kPoolSize = 300;
constexpr std::uint64_t kPoolSeed = 0x5eedf00dULL;

constexpr std::array<const char*, 16> kFirstNames = {
    "Anna", "Boris", "Clara", "David", "Elena", "Felix", "Greta", "Hugo",
    "Iris", "Jonas", "Karla", "Lucas", "Mira", "Nils", "Olga", "Paul"};
constexpr std::array<const char*, 16> kLastNames = {
    "Arden", "Brook", "Castell", "Dorn", "Ellis", "Falk", "Grove", "Hale",
    "Ingram", "Joss", "Keller", "Lorne", "Marsh", "Noble", "Orwin", "Pryce"};
constexpr std::array<const char*, 8> kPublishers = {
    "Harbor Press", "Lantern Books", "Northgate", "Quill & Co",
    "Redwood House", "Stonebridge", "Tidewater", "Vellum Press"};

std::string make_word(std::mt19937_64& rng, int syllables) {
  std::uniform_int_distribution<std::size_t> c(0, kConsonants.size() - 1);
  std::uniform_int_distribution<std::size_t> v(0, kVowels.size() - 1);
  std::string w;
  for (int i = 0; i < syllables; ++i) {
    w += kConsonants[c(rng)];
    w += kVowels[v(rng)];
  }
  return w;
}

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = [] {
    std::mt19937_64 rng(kPoolSeed);
    std::set<std::string> seen;
    std::vector<std::string> words;
    while (words.size() < kPoolSize) {
      auto w = make_word(rng, 2);
      if (seen.insert(w).second) words.push_back(w);
    }
    return words;
  }();
  return pool;
}

std::size_t draw(std::mt19937_64& rng, CountRange r) {
  return std::uniform_int_distribution<std::size_t>(r.min, r.max)(rng);
}

std::string section_text(std::mt19937_64& rng, std::size_t n_words,
                         const std::vector<std::string>& topic,
                         const std::vector<std::string>& theme,
                         const SynthOptions& opt) {
  const auto& pool = word_pool();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> sentence_len(5, 10);
  std::string out;
  std::size_t until_stop = sentence_len(rng);
  for (std::size_t i = 0; i < n_words; ++i) {
    double x = u(rng);
    const std::string* w;
    if (x < opt.topic_rate && !topic.empty()) {
      w = &topic[std::uniform_int_distribution<std::size_t>(0, topic.size() - 1)(rng)];
    } else if (x < opt.topic_rate + opt.chapter_word_rate && !theme.empty()) {
      w = &theme[std::uniform_int_distribution<std::size_t>(0, theme.size() - 1)(rng)];
    } else {
      w = &pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    }
    if (!out.empty()) out += ' ';
    out += *w;
    if (--until_stop == 0 || i + 1 == n_words) {
      out += '.';
      until_stop = sentence_len(rng);
    }
  }
  return out;
}

}  // namespace

Corpus synth_corpus(const SynthOptions& opt) {
  auto bad_range = [](CountRange r) { return r.min > r.max; };
  if (opt.n_books == 0 || bad_range(opt.chapters_per_book) ||
      bad_range(opt.sections_per_chapter) || bad_range(opt.words_per_section) ||
      opt.chapters_per_book.min == 0 || opt.words_per_section.min == 0)
    throw ValidationError("synth_corpus: invalid options");

  std::mt19937_64 rng(opt.seed);
  const auto& pool = word_pool();
  std::set<std::string> used(pool.begin(), pool.end());
  auto fresh_word = [&] {
    while (true) {
      auto w = make_word(rng, 3);
      if (used.insert(w).second) return w;
    }
  };
  auto pick_pool = [&] {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };

  Corpus corpus;
  for (std::size_t b = 0; b < opt.n_books; ++b) {
    Book book;
    char key[32];
    std::snprintf(key, sizeof(key), "bk%04zu", b + 1);
    book.book_key = key;

    std::vector<std::string> topic;
    for (std::size_t i = 0; i < std::max<std::size_t>(opt.topic_words_per_book, 1); ++i)
      topic.push_back(fresh_word());
    book.metadata.title = "The " + capitalize(topic[0]) + " " + capitalize(pick_pool());
    book.metadata.author =
        std::string(kFirstNames[std::uniform_int_distribution<std::size_t>(0, 15)(rng)]) +
        " " + kLastNames[std::uniform_int_distribution<std::size_t>(0, 15)(rng)];
    book.metadata.publisher = kPublishers[std::uniform_int_distribution<std::size_t>(0, 7)(rng)];

    std::size_t n_chapters = draw(rng, opt.chapters_per_book);
    for (std::size_t c = 0; c < n_chapters; ++c) {
      std::vector<std::string> theme;
      for (std::size_t i = 0; i < opt.chapter_words; ++i) theme.push_back(pick_pool());
      std::string title = "Chapter " + std::to_string(c + 1) + " " + capitalize(theme.empty() ? pick_pool() : theme[0]);
      std::size_t n_sections = draw(rng, opt.sections_per_chapter);
      if (n_sections == 0) {
        book.chapters.push_back(make_body_chapter(
            title, section_text(rng, draw(rng, opt.words_per_section), topic, theme, opt)));
        continue;
      }
      Chapter ch;
      ch.title = title;
      for (std::size_t s = 0; s < n_sections; ++s)
        ch.sections.push_back({"Part " + std::to_string(s + 1),
                               section_text(rng, draw(rng, opt.words_per_section),
                                            topic, theme, opt)});
      book.chapters.push_back(std::move(ch));
    }
    corpus.books.push_back(std::move(book));
  }
  validate_corpus(corpus);
  return corpus;
}

}  // namespace bookgr
