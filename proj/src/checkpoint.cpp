#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "cedi/config_io.hpp"
#include "cedi/model.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores 64-bit little-endian values");

namespace cedi::model {

namespace {

constexpr const char* kMagic = "CEDI";
constexpr int kVersion = 1;

void write_index(std::ostream& out, const char* name,
                 const corpus::StringIndex& idx) {
  out << "[vocab " << name << " " << idx.size() << "]\n";
  for (const std::string& s : idx.to_str) out << s << "\n";
}

// Cursor over the whole checkpoint buffer; text headers and raw little-endian
// blobs interleave, so stream-based getline would not do.
struct Reader {
  const std::string& buf;
  size_t pos = 0;

  std::string line() {
    if (pos >= buf.size()) throw FormatError("checkpoint truncated");
    const size_t nl = buf.find('\n', pos);
    if (nl == std::string::npos) throw FormatError("checkpoint truncated");
    std::string s = buf.substr(pos, nl - pos);
    pos = nl + 1;
    return s;
  }

  std::string peek_line() const {
    Reader copy{buf, pos};
    return copy.line();
  }

  void raw(double* dst, size_t count) {
    const size_t bytes = count * sizeof(double);
    if (pos + bytes + 1 > buf.size()) throw FormatError("checkpoint truncated");
    std::memcpy(dst, buf.data() + pos, bytes);
    pos += bytes;
    if (buf[pos] != '\n') throw FormatError("checkpoint: parameter block not terminated");
    ++pos;
  }
};

corpus::StringIndex read_index(Reader& r, const std::string& name) {
  std::istringstream header(r.line());
  std::string tag, section, count_text;
  int count = -1;
  if (header >> tag >> section >> count_text && tag == "[vocab" &&
      section == name && !count_text.empty() && count_text.back() == ']') {
    try {
      count = std::stoi(count_text.substr(0, count_text.size() - 1));
    } catch (const std::exception&) {
      count = -1;
    }
  }
  if (count < 2) {
    throw FormatError("checkpoint: expected [vocab " + name + " N] section");
  }
  corpus::StringIndex idx;
  for (int i = 0; i < count; ++i) {
    const std::string s = r.line();
    if (idx.add(s) != i) {
      throw FormatError("checkpoint: duplicate vocab entry \"" + s + "\"");
    }
  }
  return idx;
}

}  // namespace

void save(const CediModel& model, std::ostream& out) {
  out << kMagic << "\n";
  out << "version " << kVersion << "\n";
  out << "[config]\n";
  for (const auto& [key, value] : config_entries(model.config)) {
    out << key << " = " << value << "\n";
  }
  write_index(out, "tokens", model.vocab.tokens);
  write_index(out, "chars", model.vocab.chars);
  write_index(out, "prefixes", model.vocab.prefixes);
  write_index(out, "suffixes", model.vocab.suffixes);
  write_index(out, "tags", model.vocab.tags);
  for (const auto& [name, tensor] : model.named_parameters()) {
    out << "[param " << name << " " << tensor->shape.size();
    for (int d : tensor->shape) out << " " << d;
    out << "]\n";
    out.write(reinterpret_cast<const char*>(tensor->values.data()),
              static_cast<std::streamsize>(tensor->values.size() *
                                           sizeof(double)));
    out << "\n";
  }
  out << "[end]\n";
}

void save(const CediModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  save(model, out);
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

CediModel load(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  Reader r{buf};

  if (r.line() != kMagic) throw FormatError("not a CEDI checkpoint");
  {
    std::istringstream vs(r.line());
    std::string word;
    int version = -1;
    if (!(vs >> word >> version) || word != "version") {
      throw FormatError("checkpoint: missing version line");
    }
    if (version != kVersion) {
      throw CompatibilityError("checkpoint format version " +
                               std::to_string(version) + " unsupported (want " +
                               std::to_string(kVersion) + ")");
    }
  }
  if (r.line() != "[config]") throw FormatError("checkpoint: missing [config]");

  CediConfig config;
  while (!r.peek_line().empty() && r.peek_line()[0] != '[') {
    const std::string line = r.line();
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw FormatError("checkpoint config line \"" + line + "\"");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (!apply_config_key(config, key, value)) {
      throw FormatError("checkpoint: unknown config key \"" + key + "\"");
    }
  }

  corpus::Vocabulary vocab;
  vocab.tokens = read_index(r, "tokens");
  vocab.chars = read_index(r, "chars");
  vocab.prefixes = read_index(r, "prefixes");
  vocab.suffixes = read_index(r, "suffixes");
  vocab.tags = read_index(r, "tags");
  vocab.rebuild_char_lut();

  std::map<std::string, std::pair<std::vector<int>, std::vector<double>>> blobs;
  while (true) {
    const std::string header = r.line();
    if (header == "[end]") break;
    std::istringstream hs(header);
    std::string tag, name;
    int ndims = 0;
    if (!(hs >> tag >> name >> ndims) || tag != "[param" || ndims < 1 ||
        ndims > 2) {
      throw FormatError("checkpoint: bad section header \"" + header + "\"");
    }
    std::vector<int> shape(static_cast<size_t>(ndims));
    int64_t count = 1;
    for (int& d : shape) {
      std::string dim_text;
      if (!(hs >> dim_text)) {
        throw FormatError("checkpoint: bad section header \"" + header + "\"");
      }
      if (!dim_text.empty() && dim_text.back() == ']') dim_text.pop_back();
      try {
        d = std::stoi(dim_text);
      } catch (const std::exception&) {
        throw FormatError("checkpoint: bad shape in \"" + header + "\"");
      }
      if (d < 1) throw FormatError("checkpoint: bad shape in \"" + header + "\"");
      count *= d;
    }
    std::vector<double> values(static_cast<size_t>(count));
    r.raw(values.data(), values.size());
    if (!blobs.emplace(name, std::make_pair(std::move(shape), std::move(values)))
             .second) {
      throw FormatError("checkpoint: duplicate parameter \"" + name + "\"");
    }
  }

  CediModel model = build(config, vocab, nullptr);
  auto params = model.named_parameters();
  if (params.size() != blobs.size()) {
    throw FormatError("checkpoint: expected " + std::to_string(params.size()) +
                      " parameter blocks, found " +
                      std::to_string(blobs.size()));
  }
  for (auto& [name, tensor] : params) {
    auto it = blobs.find(name);
    if (it == blobs.end()) {
      throw FormatError("checkpoint: missing parameter \"" + name + "\"");
    }
    if (it->second.first != tensor->shape) {
      throw FormatError("checkpoint: shape mismatch for \"" + name + "\"");
    }
    tensor->values = std::move(it->second.second);
  }
  return model;
}

CediModel load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return load(in);
}

}  // namespace cedi::model
