//! Regenerates the committed test fixtures under `tests/fixtures`.
//!
//! ```text
//! cargo run --example make_fixtures [-- OUT_DIR]
//! ```
//!
//! Output is a pure function of the constants below, so rerunning it leaves
//! the committed files unchanged.

use std::fs;
use std::path::{Path, PathBuf};

use ggb::action::{
    encode_action, encode_output, encode_web_action, Action, AgentOutput, EpisodeStatus,
};
use ggb::geometry::{NormBBox, PixelBBox};
use ggb::harvest::{harvest_fixtures, write_jsonl, LayoutNode, PageLayout};
use ggb::metrics::{AitwSubset, Mind2WebSplit, Platform};
use ggb::prompt::PromptPools;
use ggb::rng::{derive_rng, ItemRng};
use ggb::runner::{AitwStepRecord, Mind2WebStepRecord, ScreenspotCase};
use ggb::sample::ElementKind;
use rand::Rng;

const SEED: u64 = 20240101;

const WORDS: [&str; 24] = [
    "home", "search", "cart", "profile", "settings", "news", "music", "photos", "maps", "mail",
    "calendar", "weather", "sports", "travel", "books", "games", "videos", "help", "login",
    "sign up", "checkout", "orders", "deals", "about",
];

const ICON_TITLES: [&str; 8] = [
    "Search icon",
    "Open menu",
    "Close dialog",
    "Share this page",
    "Add to favorites",
    "Notifications",
    "Download file",
    "Print receipt",
];

fn write_png(path: &Path, w: u32, h: u32, rects: &[([u32; 4], [u8; 3])], bg: [u8; 3]) {
    let mut buf = vec![0u8; (w * h * 3) as usize];
    for px in buf.chunks_mut(3) {
        px.copy_from_slice(&bg);
    }
    for (r, c) in rects {
        for y in r[1]..r[3].min(h) {
            for x in r[0]..r[2].min(w) {
                let i = ((y * w + x) * 3) as usize;
                buf[i..i + 3].copy_from_slice(c);
            }
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).unwrap();
    }
    let file = fs::File::create(path).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), w, h);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header().unwrap().write_image_data(&buf).unwrap();
}

/// A background color and a marker stripe unique to `n`, so no two
/// generated screenshots share bytes.
fn unique_image(path: &Path, w: u32, h: u32, n: u32, boxes: &[[u32; 4]]) {
    let bg = [200 + (n % 50) as u8, 210 - (n / 50 % 50) as u8, 220];
    let mut rects: Vec<([u32; 4], [u8; 3])> = boxes.iter().map(|b| (*b, [90, 120, 180])).collect();
    rects.push(([0, 0, (n % w).max(1), 1], [0, 0, 0]));
    write_png(path, w, h, &rects, bg);
}

fn rand_rect(rng: &mut ItemRng, w: u32, h: u32, min: u32) -> [u32; 4] {
    let bw = rng.gen_range(min..=(w / 4).max(min + 1));
    let bh = rng.gen_range(min..=(h / 8).max(min + 1));
    let l = rng.gen_range(0..w - bw);
    let t = rng.gen_range(0..h - bh);
    [l, t, l + bw, t + bh]
}

fn pixel(r: [u32; 4]) -> PixelBBox {
    PixelBBox::new(r[0] as f64, r[1] as f64, r[2] as f64, r[3] as f64)
}

fn norm(r: [u32; 4], w: u32, h: u32) -> NormBBox {
    let (w, h) = (w as f64, h as f64);
    NormBBox::new(
        r[0] as f64 / w,
        r[1] as f64 / h,
        r[2] as f64 / w,
        r[3] as f64 / h,
    )
    .unwrap()
}

// ------------------------------------------------------------------ web pages

fn web_pages(root: &Path) {
    let dims = [(1280, 800), (1920, 1080), (1024, 768), (1440, 900)];
    for p in 0..20u32 {
        let (w, h) = dims[p as usize % dims.len()];
        let mut rng = derive_rng(SEED, &format!("web/{p}"));
        let mut nodes = vec![LayoutNode {
            id: 0,
            bbox: pixel([0, 0, w, h]),
            text: String::new(),
            title: String::new(),
            visible: true,
        }];
        let mut push = |bbox: [u32; 4], text: String, title: String, visible: bool| {
            let id = nodes.len() as u64;
            nodes.push(LayoutNode {
                id,
                bbox: pixel(bbox),
                text,
                title,
                visible,
            });
        };
        let n_links = rng.gen_range(8..14);
        for i in 0..n_links {
            let word = WORDS[rng.gen_range(0..WORDS.len())];
            push(
                rand_rect(&mut rng, w, h, 12),
                format!("{word} {p}-{i}"),
                String::new(),
                true,
            );
        }
        for i in 0..rng.gen_range(2..5) {
            let title = ICON_TITLES[(p as usize + i) % ICON_TITLES.len()].to_string();
            push(rand_rect(&mut rng, w, h, 16), String::new(), title, true);
        }
        // Text plus tooltip: kept as two text elements.
        push(
            rand_rect(&mut rng, w, h, 12),
            format!("Account {p}"),
            format!("Manage account {p}"),
            true,
        );
        // Hidden, empty and zero-area nodes are never elements.
        push(
            rand_rect(&mut rng, w, h, 12),
            format!("hidden menu {p}"),
            String::new(),
            false,
        );
        push(
            rand_rect(&mut rng, w, h, 12),
            "   ".into(),
            String::new(),
            true,
        );
        let z = rand_rect(&mut rng, w, h, 12);
        push(
            [z[0], z[1], z[0], z[3]],
            format!("collapsed {p}"),
            String::new(),
            true,
        );
        // A wrapper repeating its child's text one pixel off is a duplicate.
        let d = rand_rect(&mut rng, w - 2, h - 2, 12);
        push(d, format!("Read more {p}"), String::new(), true);
        push(
            [d[0] + 1, d[1] + 1, d[2] + 1, d[3] + 1],
            format!("Read more {p}"),
            String::new(),
            true,
        );
        // Messy whitespace and control characters are normalized.
        push(
            rand_rect(&mut rng, w, h, 12),
            format!("  Sign\tin \n to page\u{7} {p} "),
            String::new(),
            true,
        );
        let layout = PageLayout {
            url: format!("https://fixtures.test/page-{p:02}.html"),
            width: w,
            height: h,
            nodes,
        };
        let dir = root.join(format!("page-{p:02}"));
        fs::create_dir_all(&dir).unwrap();
        let boxes: Vec<[u32; 4]> = layout
            .nodes
            .iter()
            .skip(1)
            .filter(|n| n.visible)
            .map(|n| {
                [
                    n.bbox.left as u32,
                    n.bbox.top as u32,
                    n.bbox.right as u32,
                    n.bbox.down as u32,
                ]
            })
            .collect();
        unique_image(&dir.join("screenshot.png"), w, h, p, &boxes);
        fs::write(
            dir.join("layout.json"),
            serde_json::to_string_pretty(&layout).unwrap() + "\n",
        )
        .unwrap();
    }
}

// ------------------------------------------------------------------ screenspot

fn screenspot(root: &Path) {
    let mut cases = Vec::new();
    let mut image_no = 0u32;
    for platform in Platform::ALL {
        let (w, h) = match platform {
            Platform::Mobile => (180, 390),
            Platform::Desktop => (640, 360),
            Platform::Web => (640, 400),
        };
        for img in 0..20 {
            let name = format!("images/{}-{img:02}.png", platform.as_str());
            let mut rng = derive_rng(SEED, &name);
            let mut boxes = Vec::new();
            for j in 0..20 {
                let kind = if j % 2 == 0 {
                    ElementKind::Text
                } else {
                    ElementKind::Icon
                };
                let n = cases.len();
                let mut r = rand_rect(&mut rng, w, h, 8);
                if n % 37 == 5 {
                    // Anchored at the origin, as status-bar and corner controls are.
                    r = [0, 0, r[2] - r[0], r[3] - r[1]];
                }
                let word = WORDS[rng.gen_range(0..WORDS.len())];
                let instruction = match kind {
                    ElementKind::Text => format!("open {word} entry {n:04}"),
                    ElementKind::Icon => format!("tap the {word} icon number {n:04}"),
                };
                boxes.push(r);
                cases.push(ScreenspotCase {
                    id: format!("ss-{n:04}"),
                    image: name.clone(),
                    instruction,
                    platform,
                    kind,
                    bbox: norm(r, w, h),
                });
            }
            unique_image(&root.join(&name), w, h, image_no, &boxes);
            image_no += 1;
        }
    }
    write_jsonl(&root.join("cases.jsonl"), &cases).unwrap();
}

// ------------------------------------------------------------------ aitw

fn aitw(root: &Path) {
    let (w, h) = (108, 234);
    let mut steps = Vec::new();
    let mut image_no = 0;
    for subset in AitwSubset::ALL {
        for e in 0..8 {
            let episode_id = format!("{}-{e}", subset.as_str().to_lowercase());
            let mut rng = derive_rng(SEED, &episode_id);
            let n_steps = rng.gen_range(3..6);
            let mut history: Vec<String> = Vec::new();
            for s in 0..n_steps {
                let (action, bbox) = if s == n_steps - 1 {
                    (AgentOutput::Status(EpisodeStatus::TaskComplete), None)
                } else {
                    match rng.gen_range(0..6) {
                        0..=2 => {
                            let r = rand_rect(&mut rng, w, h, 10);
                            let b = norm(r, w, h);
                            (AgentOutput::Action(Action::click(b.center())), Some((r, b)))
                        }
                        3 => (
                            AgentOutput::Action(Action::Type {
                                text: format!("{} {e}", WORDS[rng.gen_range(0..WORDS.len())]),
                            }),
                            None,
                        ),
                        4 => (AgentOutput::Action(Action::SwipeUp), None),
                        _ => (AgentOutput::Action(Action::PressEnter), None),
                    }
                };
                let image = format!("images/{episode_id}-{s}.png");
                let boxes: Vec<[u32; 4]> = bbox.iter().map(|(r, _)| *r).collect();
                unique_image(&root.join(&image), w, h, image_no, &boxes);
                image_no += 1;
                steps.push(AitwStepRecord {
                    id: format!("{episode_id}-{s}"),
                    episode_id: episode_id.clone(),
                    step: s,
                    subset,
                    instruction: format!(
                        "{} task {e}: find {}",
                        subset.as_str(),
                        WORDS[(e * 3) % WORDS.len()]
                    ),
                    image,
                    history: history.clone(),
                    ref_action: encode_output(&action),
                    ref_bbox: bbox.map(|(_, b)| b),
                });
                if let AgentOutput::Action(a) = &action {
                    history.push(encode_action(a));
                }
            }
        }
    }
    write_jsonl(&root.join("steps.jsonl"), &steps).unwrap();
}

// ------------------------------------------------------------------ mind2web

fn mind2web(root: &Path) {
    let (w, h) = (192, 108);
    let mut steps = Vec::new();
    let mut image_no = 0;
    for split in Mind2WebSplit::ALL {
        for e in 0..6 {
            let episode_id = format!("{}-{e}", split.as_str());
            let mut rng = derive_rng(SEED, &episode_id);
            let mut history: Vec<String> = Vec::new();
            for s in 0..rng.gen_range(3..5) {
                let r = rand_rect(&mut rng, w, h, 8);
                let b = norm(r, w, h);
                let action = match rng.gen_range(0..4) {
                    0 | 1 => Action::click(b.center()),
                    2 => Action::Type {
                        text: format!("{} \"{e}\"", WORDS[rng.gen_range(0..WORDS.len())]),
                    },
                    _ => Action::Select {
                        value: format!("option {}", rng.gen_range(1..9)),
                    },
                };
                let image = format!("images/{episode_id}-{s}.png");
                unique_image(&root.join(&image), w, h, image_no, &[r]);
                image_no += 1;
                let point = (!action.is_click()).then(|| b.center());
                steps.push(Mind2WebStepRecord {
                    id: format!("{episode_id}-{s}"),
                    episode_id: episode_id.clone(),
                    step: s,
                    split,
                    instruction: format!(
                        "book a {} for trip {e} on site {}",
                        WORDS[e * 2],
                        split.as_str()
                    ),
                    image,
                    history: history.clone(),
                    ref_action: encode_web_action(&action, point),
                    ref_bbox: b,
                });
                history.push(encode_action(&action));
            }
        }
    }
    write_jsonl(&root.join("steps.jsonl"), &steps).unwrap();
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    web_pages(&out.join("web"));
    let summary = harvest_fixtures(
        &out.join("web"),
        &out.join("web-golden"),
        1,
        &PromptPools::default(),
        0,
    )
    .unwrap();
    fs::remove_file(out.join("web-golden/samples.jsonl")).unwrap();
    screenspot(&out.join("screenspot"));
    aitw(&out.join("aitw"));
    mind2web(&out.join("mind2web"));
    println!(
        "wrote fixtures to {} ({} golden elements)",
        out.display(),
        summary.elements
    );
}
