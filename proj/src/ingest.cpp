#include "geocube/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "geocube/errors.hpp"

namespace geocube {
namespace {

using nlohmann::json;

constexpr std::string_view kSuffixes[] = {"s", "es", "ed", "ing"};

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Post make_post(std::string user_id, double lon, double lat, std::string_view ts, std::string text,
               const BoundingBox& bbox) {
  if (user_id.empty()) throw Error(ErrorCode::kMalformedRecord, "empty user_id");
  if (!std::isfinite(lon) || !std::isfinite(lat)) {
    throw Error(ErrorCode::kMalformedRecord, "non-finite coordinate");
  }
  Post p;
  p.user_id = std::move(user_id);
  p.lon = lon;
  p.lat = lat;
  p.timestamp = parse_iso8601(ts);
  p.text = std::move(text);
  if (!bbox.contains(lon, lat)) throw Error(ErrorCode::kOutOfBounds, "coordinate outside study area");
  return p;
}

double parse_double(std::string_view field) {
  const std::string s(trim(field));
  if (s.empty()) throw Error(ErrorCode::kMalformedRecord, "empty numeric field");
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kMalformedRecord, "unparsable number '" + s + "'");
  }
  if (used != s.size()) throw Error(ErrorCode::kMalformedRecord, "unparsable number '" + s + "'");
  return v;
}

RecordResult to_result(auto&& parse) {
  RecordResult r;
  try {
    r.post = parse();
  } catch (const Error& e) {
    r.status = e.code() == ErrorCode::kOutOfBounds ? RecordResult::Status::kOutOfBounds
                                                   : RecordResult::Status::kMalformed;
    r.error = e.what();
  }
  return r;
}

}  // namespace

IliDictionary::IliDictionary(std::vector<std::string> entries) {
  for (auto& e : entries) {
    std::string entry = lowercase(trim(e));
    if (entry.empty()) continue;
    if (std::any_of(entry.begin(), entry.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      throw Error(ErrorCode::kInvalidDictionary, "dictionary entry contains whitespace: " + entry);
    }
    entries_.push_back(std::move(entry));
  }
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  if (entries_.empty()) throw Error(ErrorCode::kInvalidDictionary, "dictionary is empty");
}

IliDictionary IliDictionary::defaults() { return IliDictionary({"flu", "cough", "sneeze", "fever"}); }

IliDictionary IliDictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableInput, "cannot read dictionary " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    entries.emplace_back(t);
  }
  return IliDictionary(std::move(entries));
}

bool IliDictionary::matches_token(std::string_view token) const {
  for (const auto& entry : entries_) {
    if (!token.starts_with(entry)) continue;
    const std::string_view rest = token.substr(entry.size());
    if (rest.empty()) return true;
    for (auto suffix : kSuffixes) {
      if (rest == suffix) return true;
    }
  }
  return false;
}

bool classify_ili(std::string_view text, const IliDictionary& dict) {
  std::string token;
  auto flush = [&] {
    const bool hit = !token.empty() && dict.matches_token(token);
    token.clear();
    return hit;
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else if (flush()) {
      return true;
    }
  }
  return flush();
}

InputFormat parse_input_format(std::string_view name) {
  if (name == "jsonl" || name == "json") return InputFormat::kJsonLines;
  if (name == "csv") return InputFormat::kCsv;
  throw Error(ErrorCode::kInvalidArgument, "unknown input format '" + std::string(name) + "'");
}

Post parse_record(std::string_view line, const BoundingBox& bbox) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "record is not an object");
  auto field = [&](const char* name) -> const json& {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) {
      throw Error(ErrorCode::kMalformedRecord, std::string("missing field ") + name);
    }
    return *it;
  };
  const json& user = field("user_id");
  const json& lon = field("lon");
  const json& lat = field("lat");
  const json& ts = field("timestamp");
  const json& text = field("text");
  if (!lon.is_number() || !lat.is_number() || !ts.is_string() || !text.is_string() ||
      !(user.is_string() || user.is_number_integer())) {
    throw Error(ErrorCode::kMalformedRecord, "field has wrong type");
  }
  return make_post(user.is_string() ? user.get<std::string>() : user.dump(), lon.get<double>(),
                   lat.get<double>(), ts.get<std::string>(), text.get<std::string>(), bbox);
}

std::string serialize_record(const Post& post) {
  json j;
  j["user_id"] = post.user_id;
  j["lon"] = post.lon;
  j["lat"] = post.lat;
  j["timestamp"] = format_iso8601(post.timestamp);
  j["text"] = post.text;
  return j.dump();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back().push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::kMalformedRecord, "unterminated quoted field");
  return fields;
}

CsvHeader::CsvHeader(std::string_view header_line) {
  const auto names = split_csv_line(header_line);
  width_ = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto name = trim(names[i]);
    const int idx = static_cast<int>(i);
    if (name == "user_id") user_id_ = idx;
    else if (name == "lon") lon_ = idx;
    else if (name == "lat") lat_ = idx;
    else if (name == "timestamp") timestamp_ = idx;
    else if (name == "text") text_ = idx;
  }
  if (user_id_ < 0 || lon_ < 0 || lat_ < 0 || timestamp_ < 0 || text_ < 0) {
    throw Error(ErrorCode::kMalformedRecord, "CSV header lacks required columns");
  }
}

Post CsvHeader::parse(std::string_view line, const BoundingBox& bbox) const {
  const auto f = split_csv_line(line);
  if (f.size() != width_) throw Error(ErrorCode::kMalformedRecord, "CSV record has wrong field count");
  return make_post(f[user_id_], parse_double(f[lon_]), parse_double(f[lat_]), trim(f[timestamp_]),
                   f[text_], bbox);
}

FileSource::FileSource(const std::filesystem::path& path, InputFormat format,
                       const BoundingBox& bbox)
    : in_(path), format_(format), bbox_(bbox) {
  if (!in_) throw Error(ErrorCode::kUnreadableInput, "cannot read " + path.string());
}

std::optional<RecordResult> FileSource::next() {
  std::string line;
  while (std::getline(in_, line)) {
    if (trim(line).empty()) continue;
    if (format_ == InputFormat::kCsv && !header_) {
      try {
        header_.emplace(line);
      } catch (const Error&) {
        throw Error(ErrorCode::kUnreadableInput, "CSV input has no valid header");
      }
      continue;
    }
    if (format_ == InputFormat::kCsv) return to_result([&] { return header_->parse(line, bbox_); });
    return to_result([&] { return parse_record(line, bbox_); });
  }
  return std::nullopt;
}

std::optional<RecordResult> VectorSource::next() {
  if (pos_ >= posts_.size()) return std::nullopt;
  RecordResult r;
  r.post = posts_[pos_++];
  return r;
}

}  // namespace geocube
