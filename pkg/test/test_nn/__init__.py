"""nn 测试"""
