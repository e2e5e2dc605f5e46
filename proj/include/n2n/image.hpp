#pragma once

#include <cstdint>
#include <vector>

namespace n2n {

// Row-major HWC raster with unit-interval intensities. Rendered frames are
// quantized to 1/255 steps so float and uint8 storage round-trip exactly.
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> px;
    double frame_time = 0.0;

    Image() = default;
    Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), px(static_cast<size_t>(h_) * w_ * c_, 0.0f) {}

    float& at(int y, int x, int ch) { return px[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return px[(static_cast<size_t>(y) * w + x) * c + ch]; }

    std::vector<uint8_t> to_u8() const {
        std::vector<uint8_t> out(px.size());
        for (size_t i = 0; i < px.size(); ++i) {
            float v = px[i];
            if (v < 0.0f) {
                v = 0.0f;
            }
            if (v > 1.0f) {
                v = 1.0f;
            }
            out[i] = static_cast<uint8_t>(v * 255.0f + 0.5f);
        }
        return out;
    }

    static Image from_u8(const std::vector<uint8_t>& data, int h, int w, int c, double t) {
        Image img(h, w, c);
        img.frame_time = t;
        for (size_t i = 0; i < data.size(); ++i) {
            img.px[i] = static_cast<float>(data[i]) / 255.0f;
        }
        return img;
    }
};

}  // namespace n2n
