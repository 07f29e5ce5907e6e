# harness 패키지: 설정, 실행, 검증, 보고서, CLI
