#include "sonarprop/weights_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "sonarprop/errors.hpp"

namespace sonarprop {

namespace {

constexpr std::array<char, 5> kMagic = {'S', 'P', 'N', 'W', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, std::size_t record) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError("weights file truncated", record);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

void put_shape(std::ostream& os, const Tensor& t) {
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put_u32(os, static_cast<std::uint32_t>(e));
}

std::vector<std::size_t> get_shape(std::istream& is, std::size_t record) {
    const std::uint32_t rank = get_u32(is, record);
    if (rank > 4) throw ParseError("weights file: tensor rank above 4", record);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) {
        e = get_u32(is, record);
        if (e == 0) throw ParseError("weights file: zero tensor extent", record);
    }
    return shape;
}

void put_values(std::ostream& os, const Tensor& t) {
    for (float v : t.values()) put_u32(os, std::bit_cast<std::uint32_t>(v));
}

Tensor get_values(std::istream& is, std::vector<std::size_t> shape, std::size_t record) {
    if (shape.empty()) return {};
    std::vector<float> data(element_count(shape));
    for (float& v : data) v = std::bit_cast<float>(get_u32(is, record));
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace

void write_records(const std::filesystem::path& path, const std::vector<WeightRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open weights file for writing: " + path.string());
    os.write(kMagic.data(), kMagic.size());
    put_u32(os, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        put_u32(os, r.kind);
        put_u32(os, static_cast<std::uint32_t>(r.attrs.size()));
        for (auto a : r.attrs) put_u32(os, a);
        put_shape(os, r.weights);
        put_shape(os, r.bias);
        put_values(os, r.weights);
        put_values(os, r.bias);
    }
    if (!os) throw IoError("failed writing weights file: " + path.string());
}

std::vector<WeightRecord> read_records(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open weights file: " + path.string());
    std::array<char, 5> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic)
        throw ParseError("not an SPNW1 weights file: " + path.string(), 0);
    const std::uint32_t count = get_u32(is, 0);
    std::vector<WeightRecord> records;
    for (std::size_t i = 0; i < count; ++i) {
        WeightRecord r;
        r.kind = get_u32(is, i);
        const std::uint32_t nattr = get_u32(is, i);
        if (nattr > 16) throw ParseError("weights file: too many layer attributes", i);
        r.attrs.resize(nattr);
        for (auto& a : r.attrs) a = get_u32(is, i);
        auto wshape = get_shape(is, i);
        auto bshape = get_shape(is, i);
        r.weights = get_values(is, std::move(wshape), i);
        r.bias = get_values(is, std::move(bshape), i);
        records.push_back(std::move(r));
    }
    return records;
}

void save_network(const std::filesystem::path& path, const Network& net) {
    std::vector<WeightRecord> records;
    for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
        const LayerSpec& l = net.spec.layers[i];
        WeightRecord r;
        r.kind = static_cast<std::uint32_t>(l.kind);
        switch (l.kind) {
            case LayerKind::conv:
                r.attrs = {static_cast<std::uint32_t>(l.conv.out_channels),
                           static_cast<std::uint32_t>(l.conv.kernel_h),
                           static_cast<std::uint32_t>(l.conv.kernel_w),
                           l.conv.padding == Padding::same ? 1u : 0u};
                break;
            case LayerKind::maxpool: r.attrs = {static_cast<std::uint32_t>(l.pool)}; break;
            case LayerKind::dense: r.attrs = {static_cast<std::uint32_t>(l.units)}; break;
            default: break;
        }
        r.weights = net.params[i].weights;
        r.bias = net.params[i].bias;
        records.push_back(std::move(r));
    }
    write_records(path, records);
}

Network load_network(const std::filesystem::path& path) {
    const auto records = read_records(path);
    Network net;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const WeightRecord& r = records[i];
        LayerSpec l;
        auto need = [&](std::size_t n) {
            if (r.attrs.size() != n) throw ParseError("weights file: wrong attribute count", i);
        };
        switch (r.kind) {
            case 0:
                need(4);
                l = LayerSpec::convolution(r.attrs[0], r.attrs[1], r.attrs[3] ? Padding::same : Padding::valid);
                l.conv.kernel_w = r.attrs[2];
                break;
            case 1: need(1); l = LayerSpec::max_pool(r.attrs[0]); break;
            case 2: need(1); l = LayerSpec::fully_connected(r.attrs[0]); break;
            case 3: need(0); l = LayerSpec::relu_activation(); break;
            case 4: need(0); l = LayerSpec::sigmoid_activation(); break;
            case kTemplatesKind: throw ParseError("weights file holds a template bank, not a network", i);
            default: throw ParseError("weights file: unknown layer kind " + std::to_string(r.kind), i);
        }
        net.spec.layers.push_back(l);
        net.params.push_back(LayerParams{r.weights, r.bias});
    }
    // Validate parameter shapes against a freshly sized network.
    const Parameters expected = init_parameters(net.spec, 0);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (expected[i].weights.shape() != net.params[i].weights.shape() ||
            expected[i].bias.shape() != net.params[i].bias.shape())
            throw ParseError("weights file: parameter shape mismatch", i);
    }
    return net;
}

}  // namespace sonarprop
