#include "bytes.hpp"
#include "hash.hpp"
#include "mist/error.hpp"
#include "mist/formats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>

namespace mist {
namespace {

constexpr std::uint32_t tag(std::uint16_t group, std::uint16_t element) {
  return (static_cast<std::uint32_t>(group) << 16) | element;
}

constexpr std::uint32_t kTransferSyntax = tag(0x0002, 0x0010);
constexpr std::uint32_t kSopClassUid = tag(0x0008, 0x0016);
constexpr std::uint32_t kSopInstanceUid = tag(0x0008, 0x0018);
constexpr std::uint32_t kModality = tag(0x0008, 0x0060);
constexpr std::uint32_t kSliceThickness = tag(0x0018, 0x0050);
constexpr std::uint32_t kSpacingBetweenSlices = tag(0x0018, 0x0088);
constexpr std::uint32_t kSeriesInstanceUid = tag(0x0020, 0x000E);
constexpr std::uint32_t kInstanceNumber = tag(0x0020, 0x0013);
constexpr std::uint32_t kImagePosition = tag(0x0020, 0x0032);
constexpr std::uint32_t kImageOrientation = tag(0x0020, 0x0037);
constexpr std::uint32_t kSliceLocation = tag(0x0020, 0x1041);
constexpr std::uint32_t kSamplesPerPixel = tag(0x0028, 0x0002);
constexpr std::uint32_t kPhotometric = tag(0x0028, 0x0004);
constexpr std::uint32_t kNumberOfFrames = tag(0x0028, 0x0008);
constexpr std::uint32_t kRows = tag(0x0028, 0x0010);
constexpr std::uint32_t kColumns = tag(0x0028, 0x0011);
constexpr std::uint32_t kPixelSpacing = tag(0x0028, 0x0030);
constexpr std::uint32_t kBitsAllocated = tag(0x0028, 0x0100);
constexpr std::uint32_t kBitsStored = tag(0x0028, 0x0101);
constexpr std::uint32_t kHighBit = tag(0x0028, 0x0102);
constexpr std::uint32_t kPixelRepresentation = tag(0x0028, 0x0103);
constexpr std::uint32_t kRescaleIntercept = tag(0x0028, 0x1052);
constexpr std::uint32_t kRescaleSlope = tag(0x0028, 0x1053);
constexpr std::uint32_t kFloatPixelData = tag(0x7FE0, 0x0008);
constexpr std::uint32_t kDoublePixelData = tag(0x7FE0, 0x0009);
constexpr std::uint32_t kPixelData = tag(0x7FE0, 0x0010);

constexpr std::uint32_t kItem = tag(0xFFFE, 0xE000);
constexpr std::uint32_t kItemDelimiter = tag(0xFFFE, 0xE00D);
constexpr std::uint32_t kSequenceDelimiter = tag(0xFFFE, 0xE0DD);
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFF;

constexpr std::string_view kImplicitLittle = "1.2.840.10008.1.2";
constexpr std::string_view kExplicitLittle = "1.2.840.10008.1.2.1";
constexpr std::string_view kSecondaryCapture = "1.2.840.10008.5.1.4.1.1.7";
constexpr std::string_view kImplementationVersion = "MIST_0_1";

// VRs for implicit-VR datasets. Anything missing is treated as UN.
const std::unordered_map<std::uint32_t, std::string_view>& dictionary() {
  static const std::unordered_map<std::uint32_t, std::string_view> dict = {
      {tag(0x0008, 0x0005), "CS"}, {tag(0x0008, 0x0008), "CS"}, {tag(0x0008, 0x0012), "DA"},
      {tag(0x0008, 0x0013), "TM"}, {kSopClassUid, "UI"},         {kSopInstanceUid, "UI"},
      {tag(0x0008, 0x0020), "DA"}, {tag(0x0008, 0x0021), "DA"}, {tag(0x0008, 0x0022), "DA"},
      {tag(0x0008, 0x0023), "DA"}, {tag(0x0008, 0x0030), "TM"}, {tag(0x0008, 0x0031), "TM"},
      {tag(0x0008, 0x0032), "TM"}, {tag(0x0008, 0x0033), "TM"}, {tag(0x0008, 0x0050), "SH"},
      {kModality, "CS"},           {tag(0x0008, 0x0070), "LO"}, {tag(0x0008, 0x0080), "LO"},
      {tag(0x0008, 0x0090), "PN"}, {tag(0x0008, 0x1030), "LO"}, {tag(0x0008, 0x103E), "LO"},
      {tag(0x0008, 0x1090), "LO"}, {tag(0x0010, 0x0010), "PN"}, {tag(0x0010, 0x0020), "LO"},
      {tag(0x0010, 0x0030), "DA"}, {tag(0x0010, 0x0040), "CS"}, {tag(0x0010, 0x1010), "AS"},
      {tag(0x0018, 0x0015), "CS"}, {kSliceThickness, "DS"},     {tag(0x0018, 0x0060), "DS"},
      {kSpacingBetweenSlices, "DS"}, {tag(0x0018, 0x1020), "LO"}, {tag(0x0018, 0x1150), "IS"},
      {tag(0x0018, 0x1151), "IS"}, {tag(0x0018, 0x5100), "CS"}, {tag(0x0020, 0x000D), "UI"},
      {kSeriesInstanceUid, "UI"},  {tag(0x0020, 0x0010), "SH"}, {tag(0x0020, 0x0011), "IS"},
      {tag(0x0020, 0x0012), "IS"}, {kInstanceNumber, "IS"},     {kImagePosition, "DS"},
      {kImageOrientation, "DS"},   {tag(0x0020, 0x0052), "UI"}, {tag(0x0020, 0x1040), "LO"},
      {kSliceLocation, "DS"},      {kSamplesPerPixel, "US"},    {kPhotometric, "CS"},
      {kNumberOfFrames, "IS"},     {kRows, "US"},               {kColumns, "US"},
      {kPixelSpacing, "DS"},       {kBitsAllocated, "US"},      {kBitsStored, "US"},
      {kHighBit, "US"},            {kPixelRepresentation, "US"}, {tag(0x0028, 0x1050), "DS"},
      {tag(0x0028, 0x1051), "DS"}, {kRescaleIntercept, "DS"},   {kRescaleSlope, "DS"},
      {tag(0x0028, 0x1054), "LO"}, {kFloatPixelData, "OF"},     {kDoublePixelData, "OD"},
      {kPixelData, "OW"},
  };
  return dict;
}

bool has_long_length(std::string_view vr) {
  static constexpr std::string_view kLong[] = {"OB", "OD", "OF", "OL", "OV", "OW", "SQ",
                                               "SV", "UC", "UN", "UR", "UT", "UV"};
  return std::find(std::begin(kLong), std::end(kLong), vr) != std::end(kLong);
}

bool is_text_vr(std::string_view vr) {
  static constexpr std::string_view kText[] = {"AE", "AS", "CS", "DA", "DS", "DT", "IS", "LO",
                                               "LT", "PN", "SH", "ST", "TM", "UC", "UI", "UR",
                                               "UT"};
  return std::find(std::begin(kText), std::end(kText), vr) != std::end(kText);
}

bool is_single_valued_text(std::string_view vr) {
  return vr == "LT" || vr == "ST" || vr == "UT" || vr == "UR";
}

int binary_width(std::string_view vr) {
  if (vr == "US" || vr == "SS") return 2;
  if (vr == "UL" || vr == "SL" || vr == "FL") return 4;
  if (vr == "FD") return 8;
  return 0;
}

struct Element {
  std::uint32_t tag = 0;
  std::string vr;
  std::span<const std::uint8_t> value;
};

// Walks one dataset level. Sequences are skipped; only top-level elements of
// the outermost dataset are recorded.
class DatasetParser {
 public:
  DatasetParser(std::span<const std::uint8_t> bytes, bool explicit_vr)
      : reader_(bytes), explicit_vr_(explicit_vr) {}

  detail::Reader& reader() { return reader_; }

  std::map<std::uint32_t, Element> parse_all() {
    std::map<std::uint32_t, Element> out;
    while (!reader_.at_end()) {
      const auto [t, vr, length] = header();
      if (length == kUndefinedLength) {
        if (t == kPixelData) {
          throw ExcludedError(ExclusionReason::UnsupportedType,
                              "encapsulated (compressed) pixel data");
        }
        skip_sequence();
        continue;
      }
      Element e{t, vr, reader_.bytes(length)};
      if (vr != "SQ") out[t] = e;
    }
    return out;
  }

 private:
  std::tuple<std::uint32_t, std::string, std::uint32_t> header() {
    const auto group = static_cast<std::uint16_t>(reader_.le(2));
    const auto element = static_cast<std::uint16_t>(reader_.le(2));
    const std::uint32_t t = tag(group, element);
    if (group == 0xFFFE) return {t, "", static_cast<std::uint32_t>(reader_.le(4))};
    if (explicit_vr_) {
      std::string vr = reader_.text(2);
      if (vr.size() != 2 || !std::isupper(static_cast<unsigned char>(vr[0])) ||
          !std::isupper(static_cast<unsigned char>(vr[1]))) {
        reader_.fail("invalid VR");
      }
      if (has_long_length(vr)) {
        reader_.skip(2);
        return {t, vr, static_cast<std::uint32_t>(reader_.le(4))};
      }
      return {t, vr, static_cast<std::uint32_t>(reader_.le(2))};
    }
    const auto& dict = dictionary();
    const auto it = dict.find(t);
    std::string vr = it != dict.end() ? std::string(it->second)
                                      : ((t & 0xFFFF) == 0 ? std::string("UL") : std::string("UN"));
    return {t, vr, static_cast<std::uint32_t>(reader_.le(4))};
  }

  // Consumes items up to and including the sequence delimiter.
  void skip_sequence() {
    while (true) {
      const auto [t, vr, length] = header();
      if (t == kSequenceDelimiter) return;
      if (t != kItem) reader_.fail("expected sequence item");
      if (length == kUndefinedLength) {
        skip_item_body();
      } else {
        reader_.skip(length);
      }
    }
  }

  void skip_item_body() {
    while (true) {
      const auto [t, vr, length] = header();
      if (t == kItemDelimiter) return;
      if (length == kUndefinedLength) {
        skip_sequence();
      } else {
        reader_.skip(length);
      }
    }
  }

  detail::Reader reader_;
  bool explicit_vr_;
};


std::string trim(std::string_view s) {
  constexpr std::string_view kPad(" \0", 2);
  const auto first = s.find_first_not_of(kPad);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kPad);
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_values(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find('\\', start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string text_of(const Element& e) { return std::string(e.value.begin(), e.value.end()); }

class Dataset {
 public:
  explicit Dataset(std::map<std::uint32_t, Element> elements) : elements_(std::move(elements)) {}

  bool has(std::uint32_t t) const { return elements_.count(t) != 0; }
  const std::map<std::uint32_t, Element>& elements() const { return elements_; }

  std::string string(std::uint32_t t) const {
    const auto it = elements_.find(t);
    return it == elements_.end() ? std::string() : trim(text_of(it->second));
  }

  std::vector<double> decimals(std::uint32_t t) const {
    std::vector<double> out;
    const auto it = elements_.find(t);
    if (it == elements_.end()) return out;
    for (const auto& item : split_values(text_of(it->second))) {
      if (item.empty()) continue;
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
      } catch (const std::exception&) {
        throw Error(ErrorCode::CorruptData, "malformed decimal '" + item + "'");
      }
    }
    return out;
  }

  std::optional<double> decimal(std::uint32_t t) const {
    const auto values = decimals(t);
    if (values.empty()) return std::nullopt;
    return values.front();
  }

  std::optional<long> integer(std::uint32_t t) const {
    const auto it = elements_.find(t);
    if (it == elements_.end()) return std::nullopt;
    const Element& e = it->second;
    if (e.vr == "US" && e.value.size() >= 2) return static_cast<long>(detail::get_le(e.value, 0, 2));
    if (e.vr == "UL" && e.value.size() >= 4) return static_cast<long>(detail::get_le(e.value, 0, 4));
    if (e.vr == "SS" && e.value.size() >= 2) {
      return static_cast<std::int16_t>(detail::get_le(e.value, 0, 2));
    }
    const auto values = decimals(t);
    if (values.empty()) return std::nullopt;
    return std::lround(values.front());
  }

 private:
  std::map<std::uint32_t, Element> elements_;
};

std::string tag_key(std::uint32_t t) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08X", t);
  return buf;
}

std::optional<std::uint32_t> parse_tag_key(const std::string& key) {
  if (key.size() != 8) return std::nullopt;
  std::uint32_t t = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), t, 16);
  if (ec != std::errc() || ptr != key.data() + key.size()) return std::nullopt;
  return t;
}

// Tags the writer regenerates from canonical fields or slice geometry.
bool is_regenerated(std::uint32_t t) {
  static constexpr std::uint32_t kOwned[] = {
      kSopInstanceUid,   kModality,         kSliceThickness,  kSpacingBetweenSlices,
      kSeriesInstanceUid, kInstanceNumber,  kImagePosition,   kImageOrientation,
      kSliceLocation,    kSamplesPerPixel,  kPhotometric,     kNumberOfFrames,
      kRows,             kColumns,          kPixelSpacing,    kBitsAllocated,
      kBitsStored,       kHighBit,          kPixelRepresentation, kRescaleIntercept,
      kRescaleSlope};
  return (t >> 16) == 0x0002 || (t >> 16) == 0x7FE0 || (t & 0xFFFF) == 0 ||
         std::find(std::begin(kOwned), std::end(kOwned), t) != std::end(kOwned);
}

nlohmann::json passthrough_tags(const Dataset& ds) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [t, e] : ds.elements()) {
    // Private groups are odd and have no portable meaning.
    if (is_regenerated(t) || ((t >> 16) & 1u) != 0) continue;
    nlohmann::json values = nlohmann::json::array();
    if (is_text_vr(e.vr)) {
      const std::string text = text_of(e);
      if (is_single_valued_text(e.vr)) {
        values.push_back(trim(text));
      } else {
        for (auto& v : split_values(text)) values.push_back(v);
      }
    } else if (const int width = binary_width(e.vr); width > 0) {
      for (std::size_t at = 0; at + static_cast<std::size_t>(width) <= e.value.size();
           at += static_cast<std::size_t>(width)) {
        const std::uint64_t raw = detail::get_le(e.value, at, width);
        if (e.vr == "US" || e.vr == "UL") {
          values.push_back(raw);
        } else if (e.vr == "SS") {
          values.push_back(static_cast<std::int16_t>(raw));
        } else if (e.vr == "SL") {
          values.push_back(static_cast<std::int32_t>(raw));
        } else if (e.vr == "FL") {
          float f;
          const auto bits = static_cast<std::uint32_t>(raw);
          std::memcpy(&f, &bits, sizeof f);
          values.push_back(f);
        } else {
          double d;
          std::memcpy(&d, &raw, sizeof d);
          values.push_back(d);
        }
      }
    } else {
      continue;
    }
    out[tag_key(t)] = {{"vr", e.vr}, {"Value", values}};
  }
  return out;
}

std::vector<std::int64_t> extract_pixels(const Dataset& ds, const Element& pixels,
                                         std::size_t rows, std::size_t cols) {
  const long allocated = ds.integer(kBitsAllocated).value_or(16);
  const long stored = ds.integer(kBitsStored).value_or(allocated);
  const bool is_signed = ds.integer(kPixelRepresentation).value_or(0) == 1;
  if (allocated > 16 || stored > 16) {
    throw ExcludedError(ExclusionReason::UnsupportedDepth,
                        "bits allocated/stored " + std::to_string(allocated) + "/" +
                            std::to_string(stored) + " exceed 16");
  }
  if ((allocated != 8 && allocated != 16) || stored < 1 || stored > allocated) {
    throw ExcludedError(ExclusionReason::UnsupportedType,
                        "bits allocated " + std::to_string(allocated) + " not supported");
  }
  const std::size_t width = static_cast<std::size_t>(allocated) / 8;
  const std::size_t count = rows * cols;
  if (pixels.value.size() < count * width) {
    throw ExcludedError(ExclusionReason::Unreadable,
                        "pixel data holds " + std::to_string(pixels.value.size()) +
                            " bytes, expected " + std::to_string(count * width));
  }
  const std::uint32_t mask = (1u << stored) - 1u;
  const std::uint32_t sign_bit = 1u << (stored - 1);
  std::vector<std::int64_t> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto raw = static_cast<std::uint32_t>(detail::get_le(pixels.value, i * width,
                                                               static_cast<int>(width))) & mask;
    values[i] = is_signed && (raw & sign_bit) ? static_cast<std::int64_t>(raw) - (std::int64_t{1} << stored)
                                              : static_cast<std::int64_t>(raw);
  }
  return values;
}

}  // namespace

bool looks_like_dicom(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 132 && std::memcmp(bytes.data() + 128, "DICM", 4) == 0;
}

DicomInstance parse_dicom(std::span<const std::uint8_t> bytes, const std::filesystem::path& origin) {
  if (!looks_like_dicom(bytes)) {
    throw Error(ErrorCode::CorruptData, "missing DICM preamble");
  }
  // File meta information is always explicit VR little endian.
  std::size_t meta_end = 132;
  {
    detail::Reader probe(bytes);
    probe.seek(132);
    while (probe.remaining() >= 8 && detail::get_le(bytes, probe.position(), 2) == 0x0002) {
      DatasetParser one(bytes.subspan(probe.position()), true);
      auto& r = one.reader();
      r.skip(4);
      const std::string vr = r.text(2);
      const std::size_t length = has_long_length(vr) ? (r.skip(2), r.le(4)) : r.le(2);
      r.skip(length);
      probe.seek(probe.position() + r.position());
    }
    meta_end = probe.position();
  }
  const Dataset meta(DatasetParser(bytes.subspan(132, meta_end - 132), true).parse_all());
  const std::string syntax = meta.string(kTransferSyntax);
  bool explicit_vr = true;
  if (syntax == kImplicitLittle) {
    explicit_vr = false;
  } else if (syntax != kExplicitLittle && !syntax.empty()) {
    throw ExcludedError(ExclusionReason::UnsupportedType,
                        "transfer syntax " + syntax + " is not uncompressed little endian");
  }
  const Dataset ds(DatasetParser(bytes.subspan(meta_end), explicit_vr).parse_all());

  if (ds.has(kFloatPixelData) || ds.has(kDoublePixelData)) {
    throw ExcludedError(ExclusionReason::UnsupportedType, "floating-point pixel data");
  }
  if (!ds.has(kPixelData)) {
    throw ExcludedError(ExclusionReason::NoPixelData, "no pixel data element");
  }
  if (ds.integer(kSamplesPerPixel).value_or(1) != 1) {
    throw ExcludedError(ExclusionReason::UnsupportedType, "multi-sample (colour) pixel data");
  }
  if (ds.integer(kNumberOfFrames).value_or(1) > 1) {
    throw ExcludedError(ExclusionReason::UnsupportedType, "multi-frame instance");
  }
  DicomInstance inst;
  inst.path = origin;
  inst.photometric = ds.string(kPhotometric);
  if (inst.photometric.empty()) inst.photometric = "MONOCHROME2";
  if (inst.photometric != "MONOCHROME1" && inst.photometric != "MONOCHROME2") {
    throw ExcludedError(ExclusionReason::UnsupportedType,
                        "photometric interpretation " + inst.photometric);
  }
  const long rows = ds.integer(kRows).value_or(0);
  const long cols = ds.integer(kColumns).value_or(0);
  if (rows < 1 || cols < 1) {
    throw ExcludedError(ExclusionReason::NoPixelData, "rows/columns missing or zero");
  }
  inst.rows = static_cast<std::size_t>(rows);
  inst.cols = static_cast<std::size_t>(cols);
  inst.series_uid = ds.string(kSeriesInstanceUid);
  inst.sop_instance_uid = ds.string(kSopInstanceUid);
  if (const auto n = ds.integer(kInstanceNumber)) inst.instance_number = static_cast<int>(*n);
  inst.modality = ds.string(kModality);
  inst.bits_stored = static_cast<int>(ds.integer(kBitsStored).value_or(16));
  if (const auto ps = ds.decimals(kPixelSpacing); ps.size() >= 2 && ps[0] > 0 && ps[1] > 0) {
    inst.pixel_spacing = std::array<double, 2>{ps[0], ps[1]};
  }
  inst.slice_thickness = ds.decimal(kSliceThickness);
  inst.spacing_between_slices = ds.decimal(kSpacingBetweenSlices);
  if (const auto ipp = ds.decimals(kImagePosition); ipp.size() == 3) {
    inst.image_position = Vec3{ipp[0], ipp[1], ipp[2]};
  }
  if (const auto iop = ds.decimals(kImageOrientation); iop.size() == 6) {
    inst.image_orientation = Orientation{iop[0], iop[1], iop[2], iop[3], iop[4], iop[5]};
  }
  inst.rescale_intercept = ds.decimal(kRescaleIntercept).value_or(0.0);
  inst.rescale_slope = ds.decimal(kRescaleSlope).value_or(1.0);

  const auto values = extract_pixels(ds, ds.elements().at(kPixelData), inst.rows, inst.cols);
  inst.plane = compute_rescale(inst.rows, inst.cols, values);
  inst.tags = passthrough_tags(ds);
  return inst;
}

DicomInstance read_dicom_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_dicom(bytes, path);
}

DecodedSeries assemble_dicom_series(std::vector<DicomInstance> instances) {
  if (instances.empty()) throw Error(ErrorCode::InvalidArgument, "no DICOM instances");
  const DicomInstance& first = instances.front();
  for (const auto& inst : instances) {
    if (inst.series_uid != first.series_uid) {
      throw Error(ErrorCode::MixedSeries, "instances from series " + first.series_uid + " and " +
                                              inst.series_uid);
    }
    if (inst.rows != first.rows || inst.cols != first.cols) {
      throw Error(ErrorCode::MixedSeries, inst.path.string() + " is " + std::to_string(inst.rows) +
                                              "x" + std::to_string(inst.cols) + ", series is " +
                                              std::to_string(first.rows) + "x" +
                                              std::to_string(first.cols));
    }
  }

  const bool has_geometry = std::all_of(instances.begin(), instances.end(), [](const auto& i) {
    return i.image_position && i.image_orientation;
  });
  Vec3 normal{0, 0, 1};
  if (has_geometry) {
    const Orientation& o = *first.image_orientation;
    normal = cross({o[0], o[1], o[2]}, {o[3], o[4], o[5]});
  }
  auto projection = [&](const DicomInstance& i) {
    if (!has_geometry) return 0.0;
    const Vec3& p = *i.image_position;
    return p[0] * normal[0] + p[1] * normal[1] + p[2] * normal[2];
  };
  std::stable_sort(instances.begin(), instances.end(), [&](const auto& a, const auto& b) {
    const double pa = projection(a), pb = projection(b);
    if (pa != pb) return pa < pb;
    const int na = a.instance_number.value_or(0), nb = b.instance_number.value_or(0);
    if (na != nb) return na < nb;
    return a.path < b.path;
  });

  // One intercept and depth for the whole series.
  std::vector<std::int64_t> signal;
  signal.reserve(instances.size() * first.rows * first.cols);
  for (const auto& inst : instances) {
    for (std::size_t i = 0; i < inst.plane.samples.size(); ++i) signal.push_back(inst.plane.signal(i));
  }
  const PixelPlane stacked = compute_rescale(first.rows * instances.size(), first.cols, signal);

  DecodedSeries series;
  const std::size_t per_slice = first.rows * first.cols;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    PixelPlane p;
    p.rows = first.rows;
    p.cols = first.cols;
    p.bit_depth = stacked.bit_depth;
    p.rescale_intercept = stacked.rescale_intercept;
    p.samples.assign(stacked.samples.begin() + static_cast<std::ptrdiff_t>(k * per_slice),
                     stacked.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * per_slice));
    series.slices.push_back(std::move(p));
  }

  const DicomInstance& head = instances.front();
  MetadataDocument& m = series.metadata;
  m.format = FormatKind::Dicom;
  m.series_id = head.series_uid;
  m.modality = head.modality;
  m.rows = head.rows;
  m.cols = head.cols;
  m.num_slices = instances.size();
  if (head.pixel_spacing) {
    m.pixel_spacing_row = (*head.pixel_spacing)[0];
    m.pixel_spacing_col = (*head.pixel_spacing)[1];
  }
  m.slice_thickness = head.slice_thickness;
  m.spacing_between_slices = head.spacing_between_slices;
  m.rescale_intercept = head.rescale_intercept;
  m.rescale_slope = head.rescale_slope;
  m.photometric = head.photometric;
  m.bits_stored = head.bits_stored;
  m.source_tags = head.tags;
  if (has_geometry) {
    m.image_position = head.image_position;
    m.image_orientation = head.image_orientation;
    Vec3 step;
    if (instances.size() > 1) {
      const Vec3& a = *head.image_position;
      const Vec3& b = *instances.back().image_position;
      const double n = static_cast<double>(instances.size() - 1);
      step = {(b[0] - a[0]) / n, (b[1] - a[1]) / n, (b[2] - a[2]) / n};
      if (!m.spacing_between_slices) m.spacing_between_slices = norm(step);
    } else {
      step = scaled(normalized(normal),
                    head.spacing_between_slices.value_or(head.slice_thickness.value_or(1.0)));
    }
    m.affine = assemble_affine(*head.image_orientation, *head.image_position, m.pixel_spacing_row,
                               m.pixel_spacing_col, step);
  }
  return series;
}

DecodedSeries read_dicom_series(std::span<const std::filesystem::path> files) {
  std::vector<DicomInstance> instances;
  for (const auto& path : files) instances.push_back(read_dicom_file(path));
  return assemble_dicom_series(std::move(instances));
}

// Writer ----------------------------------------------------------------------

namespace {

class ElementWriter {
 public:
  void text(std::uint32_t t, std::string_view vr, std::string value) {
    if (value.size() % 2) value.push_back(vr == "UI" ? '\0' : ' ');
    raw(t, vr, std::vector<std::uint8_t>(value.begin(), value.end()));
  }
  void u16(std::uint32_t t, std::uint16_t v) {
    std::vector<std::uint8_t> b;
    detail::put_le(b, v, 2);
    raw(t, "US", std::move(b));
  }
  void u32(std::uint32_t t, std::uint32_t v) {
    std::vector<std::uint8_t> b;
    detail::put_le(b, v, 4);
    raw(t, "UL", std::move(b));
  }
  void raw(std::uint32_t t, std::string_view vr, std::vector<std::uint8_t> value) {
    elements_[t] = {std::string(vr), std::move(value)};
  }
  bool has(std::uint32_t t) const { return elements_.count(t) != 0; }

  void emit(std::vector<std::uint8_t>& out) const {
    for (const auto& [t, e] : elements_) {
      detail::put_le(out, t >> 16, 2);
      detail::put_le(out, t & 0xFFFF, 2);
      detail::put_bytes(out, e.first);
      if (has_long_length(e.first)) {
        detail::put_le(out, 0, 2);
        detail::put_le(out, e.second.size(), 4);
      } else {
        detail::put_le(out, e.second.size(), 2);
      }
      out.insert(out.end(), e.second.begin(), e.second.end());
    }
  }

 private:
  std::map<std::uint32_t, std::pair<std::string, std::vector<std::uint8_t>>> elements_;
};

std::string format_decimal(double v) {
  // DS is limited to 16 characters.
  char buf[32];
  for (int precision = 15; precision > 0; --precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strlen(buf) <= 16) break;
  }
  return buf;
}

std::string join_decimals(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back('\\');
    out += format_decimal(values[i]);
  }
  return out;
}

void write_passthrough(ElementWriter& w, const nlohmann::json& tags) {
  if (!tags.is_object()) return;
  for (const auto& [key, entry] : tags.items()) {
    const auto t = parse_tag_key(key);
    if (!t || is_regenerated(*t) || !entry.is_object() || !entry.contains("vr")) continue;
    const std::string vr = entry.at("vr").get<std::string>();
    const nlohmann::json values = entry.value("Value", nlohmann::json::array());
    if (is_text_vr(vr)) {
      std::string joined;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined.push_back('\\');
        joined += values[i].is_string() ? values[i].get<std::string>() : values[i].dump();
      }
      w.text(*t, vr, std::move(joined));
    } else if (const int width = binary_width(vr); width > 0) {
      std::vector<std::uint8_t> b;
      for (const auto& v : values) {
        if (vr == "FL") {
          const float f = v.get<float>();
          std::uint32_t bits;
          std::memcpy(&bits, &f, sizeof bits);
          detail::put_le(b, bits, 4);
        } else if (vr == "FD") {
          const double d = v.get<double>();
          std::uint64_t bits;
          std::memcpy(&bits, &d, sizeof bits);
          detail::put_le(b, bits, 8);
        } else {
          detail::put_le(b, static_cast<std::uint64_t>(v.get<std::int64_t>()), width);
        }
      }
      w.raw(*t, vr, std::move(b));
    }
  }
}

}  // namespace

std::vector<std::uint8_t> encode_dicom_slice(const DecodedSeries& series, std::size_t index) {
  check_series(series);
  if (index >= series.slices.size()) {
    throw Error(ErrorCode::InvalidArgument, "slice index " + std::to_string(index) + " out of range");
  }
  const MetadataDocument& m = series.metadata;
  const PixelPlane& plane = series.slices[index];

  const std::string series_uid =
      m.format == FormatKind::Dicom && !m.series_id.empty() && m.series_id.size() <= 64
          ? m.series_id
          : detail::uid_from_seed("series:" + m.series_id);
  const std::string sop_uid = detail::uid_from_seed(
      "instance:" + series_uid + ":" + std::to_string(index) + ":" + std::to_string(plane.rows) +
      "x" + std::to_string(plane.cols));

  // Signal values, signed when they go negative.
  std::int64_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    lo = std::min(lo, plane.signal(i));
    hi = std::max(hi, plane.signal(i));
  }
  bool is_signed = lo < 0;
  std::int64_t shift = 0;
  double rescale_intercept = m.rescale_intercept;
  if (is_signed && (lo < -32768 || hi > 32767)) {
    // Too wide for int16: write unsigned storage and fold the shift into the
    // modality rescale.
    is_signed = false;
    shift = plane.rescale_intercept;
    rescale_intercept += static_cast<double>(shift) * m.rescale_slope;
  }
  int bits_stored = std::clamp(m.bits_stored, 1, 16);
  const std::int64_t max_abs = is_signed ? std::max(-lo - 1, hi) : hi - shift;
  const int needed = bit_depth_for(static_cast<std::uint32_t>(std::max<std::int64_t>(max_abs, 0))) +
                     (is_signed ? 1 : 0);
  bits_stored = std::max(bits_stored, std::min(needed, 16));

  ElementWriter w;
  write_passthrough(w, m.source_tags);
  const std::string sop_class = w.has(kSopClassUid) ? std::string() : std::string(kSecondaryCapture);
  if (!sop_class.empty()) w.text(kSopClassUid, "UI", sop_class);
  w.text(kSopInstanceUid, "UI", sop_uid);
  if (!m.modality.empty()) w.text(kModality, "CS", m.modality);
  w.text(kSeriesInstanceUid, "UI", series_uid);
  w.text(kInstanceNumber, "IS", std::to_string(index + 1));
  if (m.slice_thickness) w.text(kSliceThickness, "DS", format_decimal(*m.slice_thickness));
  if (m.spacing_between_slices) {
    w.text(kSpacingBetweenSlices, "DS", format_decimal(*m.spacing_between_slices));
  }
  if (m.affine) {
    const Vec3 position = voxel_to_world(*m.affine, 0, 0, static_cast<double>(index));
    const Vec3 row_dir = normalized(affine_column(*m.affine, 0));
    const Vec3 col_dir = normalized(affine_column(*m.affine, 1));
    w.text(kImagePosition, "DS", join_decimals(position));
    const double iop[6] = {row_dir[0], row_dir[1], row_dir[2], col_dir[0], col_dir[1], col_dir[2]};
    w.text(kImageOrientation, "DS", join_decimals(iop));
  }
  w.u16(kSamplesPerPixel, 1);
  w.text(kPhotometric, "CS", m.photometric.empty() ? "MONOCHROME2" : m.photometric);
  w.u16(kRows, static_cast<std::uint16_t>(plane.rows));
  w.u16(kColumns, static_cast<std::uint16_t>(plane.cols));
  const double spacing[2] = {m.pixel_spacing_row, m.pixel_spacing_col};
  w.text(kPixelSpacing, "DS", join_decimals(spacing));
  w.u16(kBitsAllocated, 16);
  w.u16(kBitsStored, static_cast<std::uint16_t>(bits_stored));
  w.u16(kHighBit, static_cast<std::uint16_t>(bits_stored - 1));
  w.u16(kPixelRepresentation, is_signed ? 1 : 0);
  w.text(kRescaleIntercept, "DS", format_decimal(rescale_intercept));
  w.text(kRescaleSlope, "DS", format_decimal(m.rescale_slope));

  std::vector<std::uint8_t> pixels;
  pixels.reserve(plane.samples.size() * 2);
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    const std::int64_t v = plane.signal(i) - shift;
    detail::put_le(pixels, static_cast<std::uint16_t>(v), 2);
  }
  w.raw(kPixelData, "OW", std::move(pixels));

  ElementWriter meta;
  meta.raw(tag(0x0002, 0x0001), "OB", {0x00, 0x01});
  meta.text(tag(0x0002, 0x0002), "UI", sop_class.empty() ? std::string(kSecondaryCapture) : sop_class);
  meta.text(tag(0x0002, 0x0003), "UI", sop_uid);
  meta.text(tag(0x0002, 0x0010), "UI", std::string(kExplicitLittle));
  meta.text(tag(0x0002, 0x0012), "UI", detail::uid_from_seed("mist implementation"));
  meta.text(tag(0x0002, 0x0013), "SH", std::string(kImplementationVersion));
  std::vector<std::uint8_t> meta_bytes;
  meta.emit(meta_bytes);

  std::vector<std::uint8_t> out(128, 0);
  detail::put_bytes(out, "DICM");
  ElementWriter group_length;
  group_length.u32(tag(0x0002, 0x0000), static_cast<std::uint32_t>(meta_bytes.size()));
  group_length.emit(out);
  out.insert(out.end(), meta_bytes.begin(), meta_bytes.end());
  w.emit(out);
  return out;
}

}  // namespace mist
