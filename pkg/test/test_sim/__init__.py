"""sim 测试"""
