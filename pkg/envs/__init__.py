# envs 패키지: 환경 생성기와 데이터 수집
