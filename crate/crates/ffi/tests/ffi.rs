use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use tablegrid_ffi::*;

fn last_error() -> String {
    let p = tg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn genotype(json: &str) -> *mut TgGenotype {
    let json = CString::new(json).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tg_genotype_from_json(json.as_ptr(), &mut g) }, TgStatus::Ok);
    g
}

const TABLE: &str = r#"{"max_rows":4,"max_cols":3,"origin_x":40,"origin_y":60,
    "row_heights":[50,60,45,0],"col_widths":[90,80,100]}"#;

#[test]
fn luminance_and_crop() {
    assert_eq!(tg_luminance(100, 150, 200), 141);
    let (mut x, mut y) = (0, 0);
    assert_eq!(unsafe { tg_crop_offsets(1015, 1140, 595, 842, &mut x, &mut y) }, TgStatus::Ok);
    assert_eq!((x, y), (210, 149));
    assert_eq!(unsafe { tg_crop_offsets(100, 100, 595, 842, &mut x, &mut y) }, TgStatus::InvalidArgument);
}

#[test]
fn render_then_estimate_round_trip() {
    unsafe {
        let g = genotype(TABLE);
        assert_eq!(tg_genotype_validate(g, 595, 842), TgStatus::Ok);
        assert_eq!((tg_genotype_rows(g), tg_genotype_cols(g)), (3, 3));

        let mut img = ptr::null_mut();
        assert_eq!(tg_render_skeleton(g, true, 595, 842, &mut img), TgStatus::Ok);
        assert_eq!((tg_image_width(img), tg_image_height(img), tg_image_channels(img)), (595, 842, 1));
        assert!(!tg_image_data(img).is_null());

        let mut est = ptr::null_mut();
        assert_eq!(tg_estimate_structure(img, 125, 0.25, &mut est), TgStatus::Ok);
        let mut heights = [0i32; 8];
        let mut n = 0usize;
        assert_eq!(tg_genotype_row_heights(est, heights.as_mut_ptr(), heights.len(), &mut n), TgStatus::Ok);
        assert_eq!(&heights[..n], &[50, 60, 45]);
        let mut widths = [0i32; 1];
        assert_eq!(tg_genotype_col_widths(est, widths.as_mut_ptr(), widths.len(), &mut n), TgStatus::BufferTooSmall);
        assert_eq!(n, 3);
        let (mut x, mut y) = (0, 0);
        assert_eq!(tg_genotype_origin(est, &mut x, &mut y), TgStatus::Ok);
        assert!((x - 40).abs() <= 3 && (y - 60).abs() <= 3);

        tg_genotype_free(est);
        tg_image_free(img);
        tg_genotype_free(g);
    }
}

#[test]
fn genotype_json_round_trip() {
    unsafe {
        let g = genotype(TABLE);
        let mut s = ptr::null_mut();
        assert_eq!(tg_genotype_to_json(g, &mut s), TgStatus::Ok);
        let json = CStr::from_ptr(s).to_str().unwrap().to_owned();
        tg_string_free(s);
        let back = genotype(&json);
        assert_eq!(tg_genotype_rows(back), 3);
        tg_genotype_free(back);
        tg_genotype_free(g);
    }
}

#[test]
fn blank_image_has_no_table() {
    unsafe {
        let pixels = vec![255u8; 64 * 48];
        let mut img = ptr::null_mut();
        assert_eq!(tg_image_from_gray(64, 48, pixels.as_ptr(), pixels.len(), &mut img), TgStatus::Ok);
        let mut est = ptr::null_mut();
        assert_eq!(tg_estimate_structure(img, 125, 0.25, &mut est), TgStatus::NoTable);
        assert!(est.is_null());
        assert!(!last_error().is_empty());
        tg_image_free(img);
    }
}

#[test]
fn invalid_inputs_report_status() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(tg_genotype_from_json(ptr::null(), &mut g), TgStatus::NullPointer);
        let bad = CString::new("{not json").unwrap();
        assert_eq!(tg_genotype_from_json(bad.as_ptr(), &mut g), TgStatus::InvalidData);
        let pixels = [0u8; 10];
        let mut img = ptr::null_mut();
        assert_eq!(tg_image_from_gray(4, 4, pixels.as_ptr(), pixels.len(), &mut img), TgStatus::InvalidArgument);
        let missing = CString::new("/nonexistent/dir/x.png").unwrap();
        assert_eq!(tg_image_load(missing.as_ptr(), &mut img), TgStatus::Io);
        assert!(last_error().contains("x.png"));
        assert_eq!(tg_image_width(ptr::null()), 0);
        tg_image_free(ptr::null_mut());
        tg_genotype_free(ptr::null_mut());
        tg_string_free(ptr::null_mut());
    }
}

#[test]
fn save_load_and_deskew() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.png").to_str().unwrap()).unwrap();
    unsafe {
        let g = genotype(TABLE);
        let mut img = ptr::null_mut();
        assert_eq!(tg_render_skeleton(g, false, 595, 842, &mut img), TgStatus::Ok);
        assert_eq!(tg_image_save_png(img, path.as_ptr()), TgStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(tg_image_load(path.as_ptr(), &mut loaded), TgStatus::Ok);
        let n = 595 * 842;
        assert_eq!(
            std::slice::from_raw_parts(tg_image_data(img), n),
            std::slice::from_raw_parts(tg_image_data(loaded), n)
        );
        let mut straight = ptr::null_mut();
        let mut angle = f64::NAN;
        assert_eq!(tg_deskew(loaded, 5, 35.0, &mut straight, &mut angle), TgStatus::Ok);
        assert!(angle.abs() < 0.5);
        tg_image_free(straight);
        tg_image_free(loaded);
        tg_image_free(img);
        tg_genotype_free(g);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tablegrid.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which("cc") else { return };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"tablegrid.h\"\nint main(void) { return tg_luminance(0, 0, 0) == 0 && TG_STATUS_OK == 0 ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which(name: &str) -> Result<std::path::PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| std::env::split_paths(&paths).map(|d| d.join(name)).find(|p| p.is_file()))
        .ok_or(())
}
