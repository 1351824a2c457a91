"""Regenerate the binary and text fixtures under tests/fixtures/.

    python3 scripts/make_fixtures.py [outdir]

The scissors bitmap is a 16-colour 256x192 BMP at 3937 pixels/metre; that
layout (118-byte header + 192 rows of 128 bytes) is 24694 bytes long.
"""
import math
import struct
import sys
from pathlib import Path

REUTERS = """<!DOCTYPE lewis SYSTEM "lewis.dtd">
<REUTERS TOPICS="YES" LEWISSPLIT="TRAIN" CGISPLIT="TRAINING-SET" OLDID="12509" NEWID="326">
<DATE>2-MAR-1987 06:41:06.17</DATE>
<PLACES><D>france</D></PLACES>
<COMPANIES>SNCF</COMPANIES>
<TEXT>
<TITLE>SNCF ISSUING THREE BILLION FRANC DOMESTIC BOND</TITLE>
<DATELINE>PARIS, March 2</DATELINE>
<BODY>The French state railway company, the Ste Nationale des Chemins de Fer Francaise (SNCF), is issuing a three billion French franc domestic bond in two tranches, the bond issuing committee said. Details of the issue will be announced later and it will be listed in the Official Bulletin (BALO) of March 9.
The issue will be co-led by Banque Nationale de Paris, Caisse Nationale de Credit Agricole and the Societe Marseillaise de Credit.
REUTER</BODY> </TEXT>
</REUTERS>
"""

PAGE = """<html>
<head><title>Rail bonds</title><link rel="stylesheet" HREF="style.css"></head>
<body>
<p>See the <a href="https://example.org/sncf?a=1&amp;b=2">issuer page</a>.</p>
<img SRC='chart.png' alt="chart">
</body>
</html>
"""

NOTES = "Competitive monitoring notes\nSNCF bond issue, March 1987\nFollow up with BALO listing\n"

VIEW = '''id,company,amount,issued
1,SNCF,3000000000,1987-03-02
2,"Banque Nationale de Paris",,1987-03-09
3,"Societe ""Marseillaise""",125.5,1987-03-10
'''


def scissors_pixels(width=256, height=192):
    """0 = black, 1 = white; rows top to bottom."""
    rows = []
    for y in range(height):
        row = []
        for x in range(width):
            ink = False
            for cx, cy in ((60, 50), (60, 142)):
                d = math.hypot(x - cx, y - cy)
                ink |= 22 <= d <= 32
            for y0, y1 in ((40, 150), (152, 42)):
                if 80 <= x <= 240:
                    t = (x - 80) / 160
                    yc = y0 + (y1 - y0) * t
                    half = 9 * (1 - t) + 1
                    ink |= abs(y - yc) <= half
            row.append(0 if ink else 1)
        rows.append(row)
    return rows


def bmp_4bit(rows, ppm=3937):
    height, width = len(rows), len(rows[0])
    stride = ((width * 4 + 31) // 32) * 4
    palette = b"".join(struct.pack("<BBBB", v, v, v, 0) for v in [0, 255] + [17 * i for i in range(14)])
    offset = 14 + 40 + len(palette)
    pixel_bytes = bytearray()
    for row in reversed(rows):
        packed = bytearray((row[i] << 4) | row[i + 1] for i in range(0, width, 2))
        pixel_bytes += packed + bytes(stride - len(packed))
    header = struct.pack("<2sIHHI", b"BM", offset + len(pixel_bytes), 0, 0, offset)
    dib = struct.pack("<IiiHHIIiiII", 40, width, height, 1, 4, 0, len(pixel_bytes), ppm, ppm, 16, 0)
    return header + dib + palette + bytes(pixel_bytes)


def wav_pcm(sample_rate=8000, channels=1, bits=8, n_bytes=16000):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", 1, channels, sample_rate, sample_rate * block, block, bits)
    samples = bytes(128 + int(100 * math.sin(2 * math.pi * 440 * i / sample_rate)) for i in range(n_bytes))
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", n_bytes) + samples
    return b"RIFF" + struct.pack("<I", len(body)) + body


MANIFESTS = {
    "scissors.manifest": """# Sample image
[object]
name = Sample image
date = 2001-06-15
source = Local

[subdocument]
location = scissors.bmp
keywords = scissors, black, white
""",
    "reuters.manifest": """# Reuters press release
[object]
name = Reuters Press Release
date = 2001-05-15
source = Reuters

[subdocument]
location = SGMLfile.sgml
language = English
keywords = France, SNCF
""",
    "mixed.manifest": """[object]
name = SNCF bond monitoring
date = 2001-06-20
source = Local

[subdocument]
location = SGMLfile.sgml
language = English
keywords = France, SNCF

[subdocument]
location = page.html
language = English

[subdocument]
location = notes.txt
keywords = notes

[subdocument]
location = bonds.csv
query = SELECT id, company, amount, issued FROM bonds

[subdocument]
location = bonds.csv
view_mode = intension
query = SELECT id, company, amount, issued FROM bonds

[subdocument]
location = scissors.bmp
keywords = scissors, black, white

[subdocument]
location = tone.wav
keywords = tone

[subdocument]
location = notes.txt
type = temporal
kind = video
duration = 12.5
speed = 25
""",
}


def main(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "scissors.bmp").write_bytes(bmp_4bit(scissors_pixels()))
    (outdir / "tone.wav").write_bytes(wav_pcm())
    (outdir / "SGMLfile.sgml").write_bytes(REUTERS.encode("utf-8"))
    (outdir / "page.html").write_bytes(PAGE.encode("utf-8"))
    (outdir / "notes.txt").write_bytes(NOTES.encode("utf-8"))
    (outdir / "bonds.csv").write_bytes(VIEW.encode("utf-8"))
    for name, text in MANIFESTS.items():
        (outdir / name).write_text(text, encoding="utf-8")
    for path in sorted(outdir.iterdir()):
        print(f"{path.stat().st_size:8d}  {path.name}")


if __name__ == "__main__":
    default = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
