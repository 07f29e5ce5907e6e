# agents 패키지: RCE, 오라클, 강건 목적, 비교 기법, 외부 루프 워크플로우
