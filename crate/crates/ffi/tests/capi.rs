use std::ffi::{CStr, CString};
use std::fs;
use std::ptr;

use qrepath_ffi::*;

fn selten_text() -> CString {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/games/selten.json");
    CString::new(fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    let p = qrepath_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solve_through_the_c_interface() {
    unsafe {
        let mut game = ptr::null_mut();
        assert_eq!(qrepath_game_parse(selten_text().as_ptr(), &mut game), QrepathStatus::Ok);
        assert_eq!(qrepath_game_num_players(game), 3);
        assert_eq!(qrepath_game_num_sequences(game, 0), 5);
        assert_eq!(qrepath_game_num_sequences(game, 3), 0);

        let mut cfg = qrepath_config_default();
        cfg.seed = 42;
        let mut trace = ptr::null_mut();
        assert_eq!(qrepath_solve(game, &cfg, &mut trace), QrepathStatus::Ok);
        assert!(qrepath_trace_converged(trace));
        assert!(qrepath_trace_nash_gap(trace) <= 1e-6);
        assert!(qrepath_trace_num_points(trace) > 1);

        let mut payoffs = [0.0; 3];
        assert_eq!(qrepath_trace_payoffs(trace, payoffs.as_mut_ptr(), 3), QrepathStatus::Ok);
        let mut plan = [0.0; 5];
        assert_eq!(qrepath_trace_realization(trace, 0, plan.as_mut_ptr(), 5), QrepathStatus::Ok);
        assert_eq!(plan[0], 1.0);
        assert!((plan[1] + plan[2] - 1.0).abs() < 1e-9);

        let mut short = [0.0; 2];
        assert_eq!(qrepath_trace_payoffs(trace, short.as_mut_ptr(), 2), QrepathStatus::InvalidArgument);
        assert!(last_error().contains("3 needed"));

        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("path.csv");
        let c_path = CString::new(csv.to_str().unwrap()).unwrap();
        assert_eq!(qrepath_trace_export(game, trace, c_path.as_ptr(), false), QrepathStatus::Ok);
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("t,lambda_r,"));
        assert_eq!(text.lines().count(), qrepath_trace_num_points(trace) + 1);

        qrepath_trace_free(trace);
        qrepath_game_free(game);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut game = ptr::null_mut();
        let bad = CString::new("{\"format\": \"qrepath-game v1\",\n \"players\": [").unwrap();
        assert_eq!(qrepath_game_parse(bad.as_ptr(), &mut game), QrepathStatus::Parse);
        assert!(game.is_null());
        assert!(last_error().contains("line 2"));

        let forgetful = CString::new(
            r#"{"format": "qrepath-game v1", "players": ["1"], "root": {
                "player": "1", "infoset": "I", "actions": [
                  {"label": "exit", "child": {"payoffs": [0]}},
                  {"label": "on", "child": {"player": "1", "infoset": "I", "actions": [
                    {"label": "exit", "child": {"payoffs": [4]}},
                    {"label": "on", "child": {"payoffs": [1]}}]}}]}}"#,
        )
        .unwrap();
        assert_eq!(qrepath_game_parse(forgetful.as_ptr(), &mut game), QrepathStatus::Recall);

        assert_eq!(qrepath_game_parse(ptr::null(), &mut game), QrepathStatus::InvalidArgument);
        let mut trace = ptr::null_mut();
        assert_eq!(qrepath_solve(ptr::null(), ptr::null(), &mut trace), QrepathStatus::InvalidArgument);

        assert_eq!(qrepath_game_parse(selten_text().as_ptr(), &mut game), QrepathStatus::Ok);
        let mut cfg = qrepath_config_default();
        cfg.t_end = 2.0;
        assert_eq!(qrepath_solve(game, &cfg, &mut trace), QrepathStatus::InvalidArgument);
        assert!(trace.is_null());
        qrepath_game_free(game);
        qrepath_game_free(ptr::null_mut());
        qrepath_trace_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_interface() {
    let header = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qrepath.h")).unwrap();
    for name in ["qrepath_game_parse", "qrepath_solve", "qrepath_last_error", "QrepathConfig", "QREPATH_STATUS_RECALL"] {
        assert!(header.contains(name), "{name} missing from qrepath.h");
    }
}
