// Copyright 2026 The pmqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmqa/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pmqa/error.hpp"

namespace pmqa::ad {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes little endian");

namespace {

constexpr const char* kMagic = "PMQA-CHECKPOINT 1";

bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') return false;
  }
  return true;
}

}  // namespace

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw FormatError("checkpoint has no metadata entry '" + key + "'");
}

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Checkpoint::add(std::string name, Shape shape, std::vector<float> values) {
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("checkpoint tensor '" + name + "' has " + std::to_string(values.size()) +
                     " values for shape " + shape_string(shape));
  }
  tensors.push_back({std::move(name), std::move(shape), std::move(values)});
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  std::ostringstream index;
  index << kMagic << '\n';
  for (const auto& [k, v] : checkpoint.meta) {
    if (!valid_token(k) || v.find('\n') != std::string::npos) {
      throw InvalidArgument("checkpoint metadata '" + k + "' is not representable");
    }
    index << "meta " << k << ' ' << v << '\n';
  }
  std::size_t offset = 0;
  for (const auto& t : checkpoint.tensors) {
    if (!valid_token(t.name)) throw InvalidArgument("bad checkpoint tensor name '" + t.name + "'");
    index << "tensor " << t.name << ' ' << offset << ' ' << t.values.size() << ' ' << t.shape.size();
    for (auto d : t.shape) index << ' ' << d;
    index << '\n';
    offset += t.values.size();
  }
  index << "end\n";
  std::string out = index.str();
  const std::size_t header = out.size();
  out.resize(header + offset * sizeof(float));
  char* dst = out.data() + header;
  for (const auto& t : checkpoint.tensors) {
    std::memcpy(dst, t.values.data(), t.values.size() * sizeof(float));
    dst += t.values.size() * sizeof(float);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Checkpoint ck;
  std::size_t pos = 0;
  const auto next_line = [&]() {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw FormatError("checkpoint index is truncated");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw FormatError("not a pmqa checkpoint (bad magic line)");

  struct Entry {
    std::size_t offset, count;
  };
  std::vector<Entry> entries;
  for (;;) {
    const std::string line = next_line();
    if (line == "end") break;
    if (line.rfind("meta ", 0) == 0) {
      const std::size_t space = line.find(' ', 5);
      if (space == std::string::npos) {
        ck.meta.emplace_back(line.substr(5), "");
      } else {
        ck.meta.emplace_back(line.substr(5, space - 5), line.substr(space + 1));
      }
      continue;
    }
    std::istringstream is(line);
    std::string kind, name;
    std::size_t offset = 0, count = 0, ndim = 0;
    if (!(is >> kind >> name >> offset >> count >> ndim) || kind != "tensor") {
      throw FormatError("malformed checkpoint index line: " + line);
    }
    Shape shape(ndim);
    for (auto& d : shape) {
      if (!(is >> d) || d < 0) throw FormatError("malformed tensor shape in line: " + line);
    }
    if (shape_numel(shape) != static_cast<std::int64_t>(count)) {
      throw FormatError("tensor '" + name + "' count disagrees with its shape");
    }
    ck.tensors.push_back({name, shape, {}});
    entries.push_back({offset, count});
  }
  const std::size_t payload = bytes.size() - pos;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto [offset, count] = entries[i];
    if ((offset + count) * sizeof(float) > payload) {
      throw FormatError("checkpoint payload truncated at tensor '" + ck.tensors[i].name + "'");
    }
    auto& values = ck.tensors[i].values;
    values.resize(count);
    std::memcpy(values.data(), bytes.data() + pos + offset * sizeof(float), count * sizeof(float));
  }
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_checkpoint(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace pmqa::ad
