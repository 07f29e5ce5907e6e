# schemas 패키지: 도메인 데이터 모델과 예외 계층
