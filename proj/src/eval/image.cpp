#include "aeat/eval/image.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace aeat::eval {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string ppm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

std::size_t ppm_number(std::istream& in, const char* what) {
    const std::string tok = ppm_token(in);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw ImageError(std::string("PPM: bad ") + what);
    }
    return std::stoul(tok);
}

}  // namespace

Raster read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot open image '" + path + "'");
    if (ppm_token(in) != "P6") throw ImageError("'" + path + "' is not a binary PPM (P6)");
    Raster img;
    img.width = ppm_number(in, "width");
    img.height = ppm_number(in, "height");
    if (ppm_number(in, "maxval") != 255) throw ImageError("PPM: only maxval 255 is supported");
    if (img.width == 0 || img.height == 0) throw ImageError("PPM: empty image");
    img.rgb.resize(img.width * img.height * 3);
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) throw ImageError("PPM: truncated pixel data");
    return img;
}

void write_ppm(const Raster& img, const std::string& path) {
    if (img.rgb.size() != img.width * img.height * 3) throw ImageError("write_ppm: raster size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot write image '" + path + "'");
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

double psnr(const Raster& a, const Raster& b) {
    if (a.width != b.width || a.height != b.height || a.rgb.size() != b.rgb.size()) {
        throw ImageError("psnr: raster dimensions differ");
    }
    double se = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]);
        se += d * d;
    }
    if (se == 0.0) return kPsnrIdentical;
    const double mse = se / static_cast<double>(a.rgb.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::vector<std::uint8_t> raster_to_bits(const Raster& img) {
    std::vector<std::uint8_t> bits;
    bits.reserve(img.rgb.size() * 8);
    for (std::uint8_t v : img.rgb) {
        for (int k = 7; k >= 0; --k) bits.push_back(static_cast<std::uint8_t>(v >> k & 1));
    }
    return bits;
}

Raster bits_to_raster(const std::vector<std::uint8_t>& bits, std::size_t width, std::size_t height) {
    Raster img{width, height, std::vector<std::uint8_t>(width * height * 3)};
    if (bits.size() < img.rgb.size() * 8) throw ImageError("bits_to_raster: not enough bits");
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        std::uint8_t v = 0;
        for (int k = 0; k < 8; ++k) v = static_cast<std::uint8_t>(v << 1 | (bits[i * 8 + k] & 1));
        img.rgb[i] = v;
    }
    return img;
}

std::vector<std::uint8_t> pad_bits(const std::vector<std::uint8_t>& bits, std::size_t block) {
    std::vector<std::uint8_t> out = bits;
    out.resize((bits.size() + block - 1) / block * block, 0);
    return out;
}

ImageJob image_pipeline(const Raster& img, const BlockCodec& codec, const MaskPolicy& policy,
                        const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                        std::uint64_t seed, bool noiseless) {
    const auto fr = codec.framing();
    const std::size_t N = fr.block_bits();
    ImageJob job;
    job.source = img;
    const auto payload = raster_to_bits(img);
    const auto padded = pad_bits(payload, N);
    job.payload_bits = payload.size();
    job.padded_bits = padded.size();

    const train::EnvNormalizer norm{chan.settings().ranges};
    const RngStream master(seed);
    const std::size_t n_blocks = padded.size() / N;
    std::vector<std::uint8_t> rx(padded.size());
    std::vector<double> block(N);
    double layers = 0.0;
    const std::size_t G = 64;
    for (std::size_t g0 = 0; g0 < n_blocks; g0 += G) {
        train::Batch batch;
        std::vector<model::LayerMask> masks;
        for (std::size_t b = g0; b < std::min(n_blocks, g0 + G); ++b) {
            for (std::size_t i = 0; i < N; ++i) block[i] = padded[b * N + i];
            RngStream rng = master.derive(b);
            train::append_block(batch, block, rng, fr, chan, ref, snr_db, norm, noiseless);
            masks.push_back(policy ? policy(batch.states.row(batch.states.rows - 1), b)
                                   : model::LayerMask::full(fr.layers));
            layers += masks.back().active_layers();
        }
        // Blocks sharing a mask are decided together.
        std::vector<bool> done(masks.size(), false);
        for (std::size_t first = 0; first < masks.size(); ++first) {
            if (done[first]) continue;
            std::vector<std::size_t> idx;
            for (std::size_t b = first; b < masks.size(); ++b) {
                if (!done[b] && masks[b] == masks[first]) {
                    idx.push_back(b);
                    done[b] = true;
                }
            }
            const train::Batch sub = train::gather_blocks(batch, idx, fr);
            const Tensor p = codec.decide(sub, masks[first]);
            for (std::size_t r = 0; r < idx.size(); ++r) {
                for (std::size_t i = 0; i < N; ++i) rx[(g0 + idx[r]) * N + i] = p(r, i) > 0.5 ? 1 : 0;
            }
        }
    }
    for (std::size_t i = 0; i < payload.size(); ++i) job.bit_errors += rx[i] != payload[i];
    rx.resize(payload.size());
    job.received = bits_to_raster(rx, img.width, img.height);
    job.avg_active_layers = n_blocks ? layers / static_cast<double>(n_blocks) : 0.0;
    job.psnr_db = psnr(img, job.received);
    return job;
}

}  // namespace aeat::eval
