use orthoface_web::Demo;

#[test]
fn procrustes_and_dffd_from_the_same_pair() {
    let mut d = Demo::create(7, 0.0).unwrap();
    let p = d.run("procrustes").unwrap();
    let obj_p = d.model_obj().unwrap();
    let f = d.run("dffd").unwrap();
    assert_ne!(p, f);
    assert_ne!(obj_p, d.model_obj().unwrap());
    assert!(d.landmarks_json().unwrap().contains("\"window\": \"Outline\""));
}

#[test]
fn rejects_negative_noise() {
    assert!(Demo::create(0, -1.0).is_err());
}
