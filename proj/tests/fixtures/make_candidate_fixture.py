"""Candidate-box golden fixture from a standalone mt19937_64 and the documented draw order."""
M = (1 << 64) - 1
class MT64:
    def __init__(s, seed):
        s.mt = [0]*312; s.mt[0] = seed & M
        for i in range(1, 312):
            s.mt[i] = (6364136223846793005 * (s.mt[i-1] ^ (s.mt[i-1] >> 62)) + i) & M
        s.i = 312
    def __call__(s):
        if s.i >= 312:
            for k in range(312):
                x = (s.mt[k] & 0xFFFFFFFF80000000) | (s.mt[(k+1) % 312] & 0x7FFFFFFF)
                xa = x >> 1
                if x & 1: xa ^= 0xB5026F5AA96619E9
                s.mt[k] = s.mt[(k+156) % 312] ^ xa
            s.i = 0
        y = s.mt[s.i]; s.i += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & M
def draw(r, lo, hi):
    rng = hi - lo + 1
    rb = (2**64 - rng) % rng
    v = r()
    while v < rb: v = r()
    return lo + v % rng
def boxes(w, h, n, seed):
    r = MT64(seed); mw = max(1, -(-w*5//100)); mh = max(1, -(-h*5//100)); out = []
    for _ in range(n):
        o = draw(r, 0, 2)
        if o == 0:
            hh = draw(r, mh, h); y0 = draw(r, 0, h-hh); out.append((0, y0, w, y0+hh))
        elif o == 1:
            ww = draw(r, mw, w); x0 = draw(r, 0, w-ww); out.append((x0, 0, x0+ww, h))
        else:
            ww = draw(r, mw, w); hh = draw(r, mh, h); x0 = draw(r, 0, w-ww); y0 = draw(r, 0, h-hh); out.append((x0, y0, x0+ww, y0+hh))
    return out

import json
cases = []
for w, h, n, seed in [(100, 100, 8, 42), (128, 96, 8, 7), (10, 10, 8, 1)]:
    cases.append({"width": w, "height": h, "count": n, "seed": seed,
                  "boxes": [dict(zip(("x0", "y0", "x1", "y1"), b)) for b in boxes(w, h, n, seed)]})
with open("candidate_boxes.json", "w") as f:
    json.dump(cases, f, indent=1)
    f.write("\n")
