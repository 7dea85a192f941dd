//! Seeded synthetic datasets for tests, benchmarks and the bundled toy data.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{
    derive_gender_from_captions, AnnotatedDataset, BBox, CategoryTable, FeatureHeader, FeatureStore,
    GenderLexicon, ImageRecord, InstanceRecord, Provenance, SceneGroup, INSTANCE_DIM,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_box<R: Rng>(rng: &mut R, w: f64, h: f64) -> BBox {
    let bw = rng.random_range(2.0..w * 0.8);
    let bh = rng.random_range(2.0..h * 0.8);
    BBox::new(rng.random_range(0.0..w - bw), rng.random_range(0.0..h - bh), bw, bh)
}

/// Small boxed dataset where some category pairs often label the same
/// object. At most 200 instances; boxes occasionally spill past the image.
pub fn duplicate_scenario(seed: u64) -> AnnotatedDataset {
    let mut rng = rng(seed);
    let cats = ["bagel", "doughnut", "cup", "mug", "dog", "cat"];
    let n_images = rng.random_range(10..50);
    let mut images = Vec::new();
    let mut instances = Vec::new();
    let p_dup: f64 = rng.random_range(0.0..1.0);
    'outer: for i in 0..n_images {
        let id = format!("img{i:03}");
        let (w, h) = (rng.random_range(50..400), rng.random_range(50..400));
        images.push(ImageRecord::new(&id, w, h));
        for j in 0..rng.random_range(1..5) {
            if instances.len() >= 198 {
                break 'outer;
            }
            let c = rng.random_range(0..cats.len());
            let mut b = random_box(&mut rng, f64::from(w), f64::from(h));
            if rng.random_bool(0.05) {
                b = b.translate(f64::from(w) * 0.5, 0.0);
            }
            instances.push(InstanceRecord::new(format!("{id}-{j}"), &id, cats[c], Some(b)));
            if rng.random_bool(p_dup) {
                let jitter = rng.random_range(0.0..0.06) * b.w;
                let twin = cats[c ^ 1];
                instances.push(InstanceRecord::new(format!("{id}-{j}d"), &id, twin, Some(b.translate(jitter, 0.0))));
            }
        }
    }
    let mut table = CategoryTable::default();
    for (c, s) in cats.iter().zip(["food", "food", "kitchen", "kitchen", "animal", "animal"]) {
        table.insert(*c, s);
    }
    AnnotatedDataset::new(images, instances, table, Provenance::in_memory()).expect("synthetic data is consistent")
}

/// Boxed, scene-grouped, gender-labeled dataset of at most 1000 images. The
/// size of `airplane` depends on which other objects share the image.
pub fn recommendation_scenario(seed: u64) -> AnnotatedDataset {
    let mut rng = rng(seed);
    let others = ["surfboard", "kite", "person", "car", "bird", "truck", "boat"];
    let supers = ["sports", "sports", "person", "vehicle", "animal", "vehicle", "vehicle"];
    let n_images = rng.random_range(50..=1000);
    let shrink: Vec<f64> = others.iter().map(|_| rng.random_range(0.1..1.0)).collect();
    let mut images = Vec::new();
    let mut instances = Vec::new();
    for i in 0..n_images {
        let id = format!("img{i:04}");
        let mut img = ImageRecord::new(&id, 640, 480);
        if rng.random_bool(0.8) {
            img.scene_group = Some(SceneGroup::ALL[rng.random_range(0..SceneGroup::COUNT)]);
        }
        img.gender_label = [crate::Gender::Female, crate::Gender::Male, crate::Gender::Unknown][rng.random_range(0..3)];
        images.push(img);
        let mut scale = 1.0;
        let mut k = 0;
        for (o, s) in others.iter().zip(&shrink) {
            if rng.random_bool(0.25) {
                scale *= s;
                let b = random_box(&mut rng, 640.0, 480.0);
                instances.push(InstanceRecord::new(format!("{id}-{k}"), &id, *o, Some(b)));
                k += 1;
            }
        }
        if rng.random_bool(0.7) {
            for _ in 0..rng.random_range(1..3) {
                let side = (rng.random_range(0.05..0.9) * scale * 480.0).max(1.0);
                let b = BBox::new(rng.random_range(0.0..640.0 - side), 0.0, side, side);
                let boxed = rng.random_bool(0.95);
                instances.push(InstanceRecord::new(format!("{id}-{k}"), &id, "airplane", boxed.then_some(b)));
                k += 1;
            }
        }
    }
    let mut table = CategoryTable::default();
    table.insert("airplane", "vehicle");
    for (o, s) in others.iter().zip(supers) {
        table.insert(*o, s);
    }
    AnnotatedDataset::new(images, instances, table, Provenance::in_memory()).expect("synthetic data is consistent")
}

/// Two unit-variance Gaussian blobs whose means sit `margin` standard
/// deviations on either side of the hyperplane `x0 = 0`. Returns rows and labels.
pub fn separable_blobs(seed: u64, n: usize, dim: usize, margin: f64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = rng(seed);
    let z = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2 == 0;
        let mut v: Vec<f64> = (0..dim).map(|_| z.sample(&mut rng)).collect();
        v[0] += if label { margin } else { -margin };
        rows.push(v);
        labels.push(label);
    }
    (rows, labels)
}

/// Feature-free rows with labels drawn independently of them.
pub fn independent_features(seed: u64, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = rng(seed);
    let z = Normal::new(0.0, 1.0).expect("valid normal");
    let rows = (0..n).map(|_| (0..dim).map(|_| z.sample(&mut rng)).collect()).collect();
    let labels = (0..n).map(|i| i % 2 == 0).collect();
    (rows, labels)
}

const TOY_IMAGE_DIM: usize = 16;

struct ToyCountry {
    iso: &'static str,
    local: &'static str,
    foreign: &'static str,
    tags: &'static [&'static str],
}

const TOY_COUNTRIES: [ToyCountry; 5] = [
    ToyCountry { iso: "FR", local: "fr", foreign: "en", tags: &["bonjour", "paris", "cafe", "street"] },
    ToyCountry { iso: "JP", local: "ja", foreign: "en", tags: &["temple", "tokyo", "street", "food"] },
    ToyCountry { iso: "US", local: "en", foreign: "es", tags: &["city", "beach", "street", "food"] },
    ToyCountry { iso: "KE", local: "sw", foreign: "de", tags: &["wildlife", "safari", "beach", "travel"] },
    ToyCountry { iso: "BR", local: "pt", foreign: "en", tags: &["beach", "carnival", "food", "vacation"] },
];

/// The bundled toy dataset: about 50 captioned, geotagged and tagged images
/// with boxes, plus a matching feature store (scene groups, image and
/// instance embeddings, face flags, tag languages).
pub fn toy_dataset(seed: u64) -> (AnnotatedDataset, FeatureStore) {
    let mut rng = rng(seed);
    let z = Normal::new(0.0, 1.0).expect("valid normal");
    let objects: [(&str, &str); 9] = [
        ("dog", "animal"),
        ("cat", "animal"),
        ("kite", "sports"),
        ("frisbee", "sports"),
        ("surfboard", "sports"),
        ("pizza", "food"),
        ("cup", "kitchen"),
        ("car", "vehicle"),
        ("bicycle", "vehicle"),
    ];
    let scenes = [
        SceneGroup::HomeHotel,
        SceneGroup::ShoppingDining,
        SceneGroup::SportsFieldsParks,
        SceneGroup::WaterIceSnow,
        SceneGroup::OutdoorTransportation,
    ];
    let centres: Vec<Vec<f64>> = objects
        .iter()
        .map(|_| (0..INSTANCE_DIM).map(|_| 2.0 * z.sample(&mut rng)).collect())
        .collect();
    let person_centre: Vec<f64> = (0..INSTANCE_DIM).map(|_| 2.0 * z.sample(&mut rng)).collect();
    let scene_shift: Vec<Vec<f64>> = scenes
        .iter()
        .map(|_| (0..INSTANCE_DIM).map(|_| z.sample(&mut rng)).collect())
        .collect();
    let lexicon = GenderLexicon::default();

    let mut table = CategoryTable::default();
    table.insert("person", "person");
    for (c, s) in objects {
        table.insert(c, s);
    }
    let mut images = Vec::new();
    let mut instances = Vec::new();
    let mut store = FeatureStore {
        header: Some(FeatureHeader {
            image_dim: TOY_IMAGE_DIM,
            instance_dim: INSTANCE_DIM,
            embedders: BTreeMap::from([
                ("image".to_string(), "synthetic-gaussian".to_string()),
                ("instance".to_string(), "synthetic-gaussian".to_string()),
                ("scene".to_string(), "synthetic".to_string()),
            ]),
        }),
        ..Default::default()
    };

    for i in 0..52 {
        let id = format!("toy{i:03}");
        let (w, h) = (*[640u32, 800, 1024].choose(&mut rng).expect("nonempty"), *[480u32, 600].choose(&mut rng).expect("nonempty"));
        let mut img = ImageRecord::new(&id, w, h);
        let gender_roll = i % 5;
        let person_word = match gender_roll {
            0 | 1 => "woman",
            2 | 3 => "man",
            _ => "person",
        };
        let scene_idx = if person_word == "woman" { rng.random_range(0..3) } else { rng.random_range(1..5) };
        let scene = scenes[scene_idx];
        let n_objects = rng.random_range(1..4);
        let mut chosen: Vec<usize> = Vec::new();
        for _ in 0..n_objects {
            let o = if person_word == "woman" { rng.random_range(0..6) } else { rng.random_range(2..9) };
            if !chosen.contains(&o) {
                chosen.push(o);
            }
        }
        let country = &TOY_COUNTRIES[i % TOY_COUNTRIES.len()];
        let names: Vec<&str> = chosen.iter().map(|o| objects[*o].0).collect();
        img.captions = vec![
            format!("a {person_word} with a {}", names.join(" and a ")),
            format!("photo of a {} outdoors", names[0]),
        ];
        img.gender_label = derive_gender_from_captions(&img.captions, &lexicon);
        img.country = Some(country.iso.to_string());
        let mut tags: Vec<String> = country.tags.iter().filter(|_| rng.random_bool(0.6)).map(|t| t.to_string()).collect();
        tags.push("street".into());
        tags.sort();
        tags.dedup();
        let foreign = rng.random_bool(0.4);
        let langs = if i % 7 == 6 {
            vec!["und".to_string()]
        } else if foreign {
            vec![country.foreign.to_string()]
        } else {
            vec![country.local.to_string()]
        };
        img.tags = tags;
        store.tag_languages.insert(id.clone(), langs);
        store.scene_groups.insert(id.clone(), scene);
        let female = img.gender_label == crate::Gender::Female;
        let image_vec: Vec<f64> = (0..TOY_IMAGE_DIM)
            .map(|d| z.sample(&mut rng) + if d == 0 && female { 1.5 } else { 0.0 } + scene_idx as f64 * 0.3)
            .collect();
        store.image_features.insert(id.clone(), image_vec);
        images.push(img);

        let (fw, fh) = (f64::from(w), f64::from(h));
        let n_people = if i % 9 == 8 { 2 } else { 1 };
        let mut person_boxes = Vec::new();
        for p in 0..n_people {
            let pid = format!("{id}-p{p}");
            let side = if i % 6 == 5 { 25.0 } else { rng.random_range(60.0..200.0) };
            let b = BBox::new(rng.random_range(0.0..fw - side), rng.random_range(0.0..fh - side), side, side * 1.5_f64.min((fh - 1.0) / side));
            let b = b.clip_to(fw, fh);
            person_boxes.push(b);
            instances.push(InstanceRecord::new(&pid, &id, "person", Some(b)));
            store.face_flags.insert(pid.clone(), side > 100.0 && rng.random_bool(0.8));
            store
                .instance_features
                .insert(pid, person_centre.iter().map(|m| m + 0.5 * z.sample(&mut rng)).collect());
        }
        for (k, o) in chosen.iter().enumerate() {
            let oid = format!("{id}-o{k}");
            let (name, _) = objects[*o];
            let anchor = person_boxes[0];
            let gap = if female { rng.random_range(80.0..250.0) } else { rng.random_range(5.0..120.0) };
            let side = rng.random_range(20.0..(fw.min(fh) / 3.0));
            let x = (anchor.x + gap).min(fw - side).max(0.0);
            let y = rng.random_range(0.0..fh - side);
            let b = BBox::new(x, y, side, side);
            instances.push(InstanceRecord::new(&oid, &id, name, Some(b)));
            let v: Vec<f64> = centres[*o]
                .iter()
                .zip(&scene_shift[scene_idx])
                .map(|(c, s)| c + s + 0.7 * z.sample(&mut rng))
                .collect();
            store.instance_features.insert(oid.clone(), v);
            if name == "pizza" && rng.random_bool(0.5) {
                instances.push(InstanceRecord::new(format!("{oid}d"), &id, "cup", Some(b.translate(1.0, 0.0))));
            }
        }
    }
    let mut ds = AnnotatedDataset::new(images, instances, table, Provenance::in_memory()).expect("toy data is consistent");
    let (attached, _) = crate::dataset::attach_feature_store(ds, store.clone()).expect("toy features are consistent");
    ds = attached;
    (ds, store)
}
